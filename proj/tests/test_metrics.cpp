#include <catch2/catch.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "jitdp/metrics.hpp"
#include "jitdp/rng.hpp"

using namespace jitdp;

namespace {

// Independent oracle: evaluate -sum(p*log2 p) term by term with literal
// arithmetic, no shared helpers with the implementation.
double entropy_oracle(const std::vector<double>& p) {
    double h = 0.0;
    for (double v : p) {
        if (v > 0.0) h += v * (std::log(v) / std::log(2.0));
    }
    return -h;
}

}  // namespace

TEST_CASE("entropy matches direct summation of the definition", "[metrics]") {
    // 0.5*1 + 0.25*2 + 0.25*2 bits, every term dyadic.
    CHECK(entropy({{0.5, 0.25, 0.25}}) == Approx(1.5).margin(1e-12));
    CHECK(entropy({{1.0}}) == 0.0);
    // Frozen from the oracle: 0.7,0.2,0.1 profile.
    CHECK(entropy({{0.7, 0.2, 0.1}}) == Approx(1.1567796494470395).margin(1e-9));
    CHECK(entropy({{0.7, 0.2, 0.1}}) == Approx(entropy_oracle({0.7, 0.2, 0.1})).margin(1e-12));
}

TEST_CASE("entropy extremes: one-hot is zero, uniform is log2(n)", "[metrics]") {
    CHECK(entropy({{0.0, 1.0, 0.0}}) == 0.0);
    for (std::size_t n : {2u, 3u, 5u, 8u, 13u}) {
        std::vector<double> uniform(n, 1.0 / static_cast<double>(n));
        CHECK(entropy({uniform}) == Approx(std::log2(static_cast<double>(n))).margin(1e-9));
    }
}

TEST_CASE("entropy bounds and permutation invariance over random profiles", "[metrics]") {
    Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = 1 + rng.below(12);
        std::vector<double> p(n);
        double sum = 0.0;
        for (auto& v : p) {
            v = rng.uniform() + 1e-6;
            sum += v;
        }
        for (auto& v : p) v /= sum;
        double h = entropy({p});
        CHECK(h >= 0.0);
        CHECK(h <= std::log2(static_cast<double>(n)) + 1e-12);

        std::vector<double> shuffled = p;
        rng.shuffle(shuffled);
        CHECK(entropy({shuffled}) == Approx(h).margin(1e-9));
    }
}

TEST_CASE("entropy rejects invalid profiles", "[metrics]") {
    CHECK_THROWS_MATCHES(entropy({{0.5, 0.6}}), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == errc::prob;
                         }));
    CHECK_THROWS_AS(entropy({{-0.1, 1.1}}), Error);
    CHECK_THROWS_AS(entropy({{}}), Error);
}

TEST_CASE("average age is the arithmetic mean of the intervals", "[metrics]") {
    CHECK(average_age(std::vector<double>{3, 5, 4}) == 4.0);
    CHECK(average_age(std::vector<double>{7}) == 7.0);
    CHECK_THROWS_MATCHES(average_age(std::vector<double>{}), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == errc::empty;
                         }));
}

TEST_CASE("churn normalization divides by lt and nf", "[metrics]") {
    auto r = normalize_churn(10, 5, 100, 2, 4);
    CHECK(r.la == Approx(0.1));
    CHECK(r.ld == Approx(0.05));
    CHECK(r.lt == Approx(50.0));
    CHECK(r.nuc == Approx(2.0));
    CHECK_FALSE(r.raw_churn);
}

TEST_CASE("churn normalization passes raw la/ld through when lt is zero", "[metrics]") {
    auto r = normalize_churn(30, 0, 0, 1, 1);
    CHECK(r.la == 30.0);
    CHECK(r.ld == 0.0);
    CHECK(r.lt == 0.0);
    CHECK(r.nuc == 1.0);
    CHECK(r.raw_churn);

    auto zeros = normalize_churn(0, 0, 0, 1, 0);
    CHECK(zeros.la == 0.0);
    CHECK(zeros.ld == 0.0);
    CHECK_FALSE(zeros.raw_churn);  // nothing raw about an all-zero row
}

TEST_CASE("churn normalization requires nf >= 1", "[metrics]") {
    CHECK_THROWS_MATCHES(normalize_churn(1, 1, 1, 0, 1), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == errc::nf;
                         }));
}

TEST_CASE("recall and precision ratios", "[metrics]") {
    CHECK(recall({.tp = 5, .fp = 0, .tn = 0, .fn = 5}) == 0.5);
    CHECK(recall({.tp = 3, .fp = 0, .tn = 0, .fn = 1}) == 0.75);
    CHECK(precision({.tp = 7, .fp = 3, .tn = 0, .fn = 0}) == 0.7);
    CHECK(precision({.tp = 0, .fp = 5, .tn = 0, .fn = 0}) == 0.0);
    CHECK_THROWS_MATCHES(recall({.tp = 0, .fp = 1, .tn = 1, .fn = 0}), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == errc::undefined;
                         }));
    CHECK_THROWS_AS(precision({.tp = 0, .fp = 0, .tn = 1, .fn = 1}), Error);
}

TEST_CASE("recall and precision grow with tp, other counts fixed", "[metrics]") {
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        ConfusionCounts c{.tp = rng.below(50), .fp = 1 + rng.below(50), .tn = rng.below(50),
                          .fn = 1 + rng.below(50)};
        ConfusionCounts more = c;
        more.tp += 1 + rng.below(10);
        CHECK(recall(more) >= recall(c));
        CHECK(precision(more) >= precision(c));
    }
}
