#include <catch2/catch.hpp>

#include <cmath>
#include <vector>

#include "jitdp/preprocess.hpp"
#include "jitdp/synth.hpp"
#include "temp_files.hpp"

using namespace jitdp;

TEST_CASE("generated data is deterministic and schema-complete", "[synth]") {
    SynthSpec spec;
    spec.n_rows = 200;
    spec.defect_fraction = 0.3;
    spec.seed = 42;

    Dataset a = generate(spec);
    Dataset b = generate(spec);
    CHECK(a.n_features() == 14);
    CHECK(a.n_rows() == 200);
    for (std::size_t c = 0; c < a.n_features(); ++c) CHECK(a.column(c) == b.column(c));

    // exact label fraction up to rounding
    CHECK(a.count_label(1) == 60);

    // a different seed moves the data
    spec.seed = 43;
    Dataset c = generate(spec);
    CHECK(c.column("lt") != a.column("lt"));
}

TEST_CASE("generated files survive ingestion and strict log", "[synth]") {
    SynthSpec spec;
    spec.n_rows = 150;
    spec.seed = 7;
    Dataset d = generate(spec);

    // round-trip through the canonical CSV reader
    std::string path = testutil::temp_path("synth.csv");
    save_dataset(d, path);
    Dataset loaded = load_dataset(path);
    CHECK(loaded.n_rows() == d.n_rows());
    for (const auto& name : d.feature_names()) CHECK(loaded.column(name) == d.column(name));

    // all log-designated values >= 1 by construction, so strict log holds
    TransformPlan plan;
    Dataset logged = log_transform(loaded, plan);
    for (const auto& name : plan.log_columns) {
        for (double v : logged.column(name)) {
            CHECK(std::isfinite(v));
            CHECK(v >= 0.0);
        }
    }

    // non-negative fields all over
    for (const auto& name : d.feature_names()) {
        for (double v : d.column(name)) CHECK(v >= 0.0);
    }
    for (double v : d.column("fix")) CHECK((v == 0.0 || v == 1.0));
}

TEST_CASE("signal features separate class-conditional means in the stated direction", "[synth]") {
    SynthSpec spec;
    spec.n_rows = 2000;
    spec.signal_features = {"lt", "age"};
    spec.separation = 2.0;
    spec.seed = 11;
    Dataset d = generate(spec);

    for (const auto& name : {"lt", "age"}) {
        double mean_pos = 0, mean_neg = 0;
        std::size_t n_pos = 0, n_neg = 0;
        const auto& col = d.column(name);
        for (std::size_t i = 0; i < d.n_rows(); ++i) {
            if (d.label(i) == 1) {
                mean_pos += col[i];
                ++n_pos;
            } else {
                mean_neg += col[i];
                ++n_neg;
            }
        }
        INFO(name);
        CHECK(mean_pos / n_pos > mean_neg / n_neg);
    }

    // non-signal column stays put
    double mean_pos = 0, mean_neg = 0;
    std::size_t n_pos = 0, n_neg = 0;
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        if (d.label(i) == 1) {
            mean_pos += d.column("exp")[i];
            ++n_pos;
        } else {
            mean_neg += d.column("exp")[i];
            ++n_neg;
        }
    }
    double rel_gap = std::abs(mean_pos / n_pos - mean_neg / n_neg) / (mean_neg / n_neg);
    CHECK(rel_gap < 0.25);
}

TEST_CASE("spec validation rejects nonsense", "[synth]") {
    SynthSpec bad;
    bad.defect_fraction = 1.2;
    CHECK_THROWS_MATCHES(generate(bad), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == errc::spec;
                         }));
    SynthSpec neg;
    neg.separation = -1;
    CHECK_THROWS_AS(generate(neg), Error);
    SynthSpec unknown;
    unknown.signal_features = {"bogus"};
    CHECK_THROWS_AS(generate(unknown), Error);
    SynthSpec empty;
    empty.n_rows = 0;
    CHECK_THROWS_AS(generate(empty), Error);
}
