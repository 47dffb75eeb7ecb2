#include <catch2/catch.hpp>

#include <cmath>
#include <vector>

#include "jitdp/pca.hpp"
#include "jitdp/rng.hpp"
#include "jitdp/synth.hpp"
#include "temp_files.hpp"

using namespace jitdp;

namespace {

Dataset xy_dataset(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<int> labels(x.size(), 0);
    return Dataset({"lt", "age"}, {x, y}, labels, "xy");
}

Dataset gaussian_cloud(std::size_t n, std::size_t dims, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<double>> cols(dims);
    for (auto& c : cols) {
        c.reserve(n);
        for (std::size_t i = 0; i < n; ++i) c.push_back(rng.normal());
    }
    std::vector<std::string> names;
    for (std::size_t i = 0; i < dims; ++i) names.push_back("f" + std::to_string(i));
    return Dataset(names, std::move(cols), std::vector<int>(n, 0), "cloud");
}

double frobenius(const Matrix& m) {
    double s = 0.0;
    for (double v : m.data) s += v * v;
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("rank-1 data puts all variance on the first component", "[pca]") {
    std::vector<double> x, y;
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        double v = rng.uniform() * 10.0;
        x.push_back(v);
        y.push_back(2.0 * v);
    }
    PcaModel m = fit_pca(xy_dataset(x, y), {"lt", "age"}, 2);
    CHECK(m.explained_variance_ratio[0] == Approx(1.0).margin(1e-9));
    CHECK(m.explained_variance_ratio[0] + m.explained_variance_ratio[1] == Approx(1.0).margin(1e-9));
    // the leading direction is (1,2)/sqrt(5)
    CHECK(std::abs(m.components[0][0]) == Approx(1.0 / std::sqrt(5.0)).margin(1e-9));
    CHECK(std::abs(m.components[0][1]) == Approx(2.0 / std::sqrt(5.0)).margin(1e-9));
}

TEST_CASE("isotropic cloud splits variance evenly", "[pca]") {
    Dataset d = gaussian_cloud(10000, 2, 17);
    PcaModel m = fit_pca(d, d.feature_names(), 2);
    CHECK(m.explained_variance_ratio[0] == Approx(0.5).margin(0.05));
    CHECK(m.explained_variance_ratio[1] == Approx(0.5).margin(0.05));
}

TEST_CASE("pca dimension and degeneracy guards", "[pca]") {
    Dataset d = gaussian_cloud(20, 3, 5);
    CHECK_THROWS_MATCHES(fit_pca(d, d.feature_names(), 4), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == errc::dim;
                         }));
    Dataset one = gaussian_cloud(1, 2, 5);
    CHECK_THROWS_MATCHES(fit_pca(one, one.feature_names(), 1), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == errc::degenerate;
                         }));
    Dataset wide = gaussian_cloud(2, 3, 5);
    CHECK_THROWS_AS(fit_pca(wide, wide.feature_names(), 1), Error);

    // constant data has no variance to decompose
    Dataset flat({"lt"}, {{5, 5, 5}}, {0, 0, 0});
    CHECK_THROWS_MATCHES(fit_pca(flat, {"lt"}, 1), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == errc::degenerate;
                         }));
}

TEST_CASE("model invariants: orthonormal components, ordered eigenvalues, unit ratio sum", "[pca]") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        SynthSpec spec;
        spec.n_rows = 120;
        spec.seed = seed;
        Dataset d = generate(spec);
        PcaModel m = fit_pca(d, d.feature_names(), d.n_features());

        double ratio_sum = 0.0;
        for (double r : m.explained_variance_ratio) ratio_sum += r;
        CHECK(ratio_sum == Approx(1.0).margin(1e-9));

        for (std::size_t i = 0; i + 1 < m.eigenvalues.size(); ++i) {
            CHECK(m.eigenvalues[i] >= m.eigenvalues[i + 1] - 1e-12);
            CHECK(m.eigenvalues[i] >= -1e-9);
        }
        for (std::size_t i = 0; i < m.components.size(); ++i) {
            double norm = 0.0;
            for (double v : m.components[i]) norm += v * v;
            CHECK(std::sqrt(norm) == Approx(1.0).margin(1e-9));
            for (std::size_t j = i + 1; j < m.components.size(); ++j) {
                double dot = 0.0;
                for (std::size_t c = 0; c < m.components[i].size(); ++c)
                    dot += m.components[i][c] * m.components[j][c];
                CHECK(std::abs(dot) <= 1e-8);
            }
        }
    }
}

TEST_CASE("deterministic sign convention and rerun stability", "[pca]") {
    Dataset d = gaussian_cloud(300, 5, 23);
    PcaModel a = fit_pca(d, d.feature_names(), 5);
    PcaModel b = fit_pca(d, d.feature_names(), 5);
    for (std::size_t i = 0; i < a.components.size(); ++i) {
        CHECK(a.components[i] == b.components[i]);
        std::size_t arg = 0;
        for (std::size_t c = 1; c < a.components[i].size(); ++c) {
            if (std::abs(a.components[i][c]) > std::abs(a.components[i][arg])) arg = c;
        }
        CHECK(a.components[i][arg] > 0.0);
    }
    CHECK(a.eigenvalues == b.eigenvalues);
}

TEST_CASE("explained ratios are invariant under row permutation", "[pca]") {
    Dataset d = gaussian_cloud(200, 4, 31);
    PcaModel m1 = fit_pca(d, d.feature_names(), 4);
    std::vector<std::size_t> perm(d.n_rows());
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(77);
    rng.shuffle(perm);
    PcaModel m2 = fit_pca(d.with_rows(perm), d.feature_names(), 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(m1.explained_variance_ratio[i] == Approx(m2.explained_variance_ratio[i]).margin(1e-9));
    }
}

TEST_CASE("projection centers the fitting data and reconstruction is lossless", "[pca]") {
    Dataset d = gaussian_cloud(150, 6, 41);
    PcaModel m = fit_pca(d, d.feature_names(), 6);
    Projection proj = project(m, d);
    REQUIRE(proj.points.rows == d.n_rows());
    for (std::size_t j = 0; j < proj.points.cols; ++j) {
        double mean = 0.0;
        for (std::size_t r = 0; r < proj.points.rows; ++r) mean += proj.points.at(r, j);
        mean /= static_cast<double>(proj.points.rows);
        CHECK(std::abs(mean) <= 1e-8);
    }

    Matrix original = d.feature_matrix(d.feature_names());
    Matrix rebuilt = reconstruct(m, proj.points);
    Matrix diff = original;
    for (std::size_t i = 0; i < diff.data.size(); ++i) diff.data[i] -= rebuilt.data[i];
    CHECK(frobenius(diff) / frobenius(original) <= 1e-8);

    // a row equal to the mean vector projects to the origin
    std::vector<std::vector<double>> mean_col;
    for (double v : m.means) mean_col.push_back({v});
    Dataset mean_row(d.feature_names(), mean_col, {0});
    Projection origin = project(m, mean_row);
    for (std::size_t j = 0; j < origin.points.cols; ++j) {
        CHECK(std::abs(origin.points.at(0, j)) <= 1e-9);
    }

    Dataset other = gaussian_cloud(10, 2, 5);
    CHECK_THROWS_MATCHES(project(m, other), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == errc::feature_mismatch;
                         }));
}

TEST_CASE("standardized fit guards zero-variance columns", "[pca]") {
    Dataset d({"lt", "age", "flat"},
              {{1, 2, 3, 4}, {4, 3, 2, 1}, {7, 7, 7, 7}},
              {0, 0, 1, 1});
    PcaModel m = fit_pca(d, d.feature_names(), 3, /*standardize=*/true);
    CHECK(m.scales[0] > 0.0);
    CHECK(m.scales[2] == 1.0);  // untouched rather than divided by zero
    for (double ev : m.eigenvalues) CHECK(std::isfinite(ev));
    Projection p = project(m, d);
    for (double v : p.points.data) CHECK(std::isfinite(v));
}

TEST_CASE("scatter export writes one row per point", "[pca]") {
    Dataset d = xy_dataset({1, 2, 3}, {2, 4, 7});
    PcaModel m = fit_pca(d, {"lt", "age"}, 2);
    Projection proj = project(m, d);
    std::string path = testutil::temp_path("scatter.csv");
    export_scatter(proj, path);
    std::string content = testutil::read_file(path);
    CHECK(content.rfind("pc1,pc2,label\n", 0) == 0);
    CHECK(std::count(content.begin(), content.end(), '\n') == 4);

    PcaModel m1 = fit_pca(d, {"lt", "age"}, 1);
    Projection proj1 = project(m1, d);
    std::string path1 = testutil::temp_path("scatter1.csv");
    export_scatter(proj1, path1);
    CHECK(testutil::read_file(path1).rfind("pc1,label\n", 0) == 0);

    CHECK_THROWS_MATCHES(export_scatter(proj, "/nonexistent/dir/out.csv"), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == errc::io;
                         }));
}
