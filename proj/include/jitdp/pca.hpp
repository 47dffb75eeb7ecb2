#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "jitdp/csv.hpp"
#include "jitdp/dataset.hpp"
#include "jitdp/error.hpp"
#include "jitdp/matrix.hpp"

namespace jitdp {

// ---------------------------------------------------------------------------
// Jacobi eigendecomposition (symmetric, tiny matrices)
// ---------------------------------------------------------------------------

namespace detail {

struct EigenResult {
    std::vector<double> values;           // descending
    std::vector<std::vector<double>> vectors;  // vectors[i] pairs with values[i]
};

inline double off_diagonal_norm(const Matrix& a) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < a.cols; ++j) {
            if (i != j) sum += a.at(i, j) * a.at(i, j);
        }
    }
    return std::sqrt(sum);
}

// Cyclic Jacobi rotations. The covariance matrices here are at most 14x14,
// where this converges in a handful of sweeps. Threshold is relative to the
// matrix magnitude so large raw-scale variances still terminate.
inline EigenResult jacobi_eigen(Matrix a) {
    const std::size_t n = a.rows;
    Matrix v(n, n);
    for (std::size_t i = 0; i < n; ++i) v.at(i, i) = 1.0;

    double total = 0.0;
    for (double x : a.data) total += x * x;
    const double threshold = 1e-12 * std::max(std::sqrt(total), 1e-300);

    for (int sweep = 0; sweep < 100 && off_diagonal_norm(a) > threshold; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = a.at(p, q);
                if (apq == 0.0) continue;
                double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
                double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;

                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a.at(k, p), akq = a.at(k, q);
                    a.at(k, p) = c * akp - s * akq;
                    a.at(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a.at(p, k), aqk = a.at(q, k);
                    a.at(p, k) = c * apk - s * aqk;
                    a.at(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double vkp = v.at(k, p), vkq = v.at(k, q);
                    v.at(k, p) = c * vkp - s * vkq;
                    v.at(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a.at(x, x) > a.at(y, y); });

    EigenResult r;
    r.values.reserve(n);
    r.vectors.reserve(n);
    for (std::size_t i : order) {
        r.values.push_back(a.at(i, i));
        std::vector<double> vec(n);
        for (std::size_t k = 0; k < n; ++k) vec[k] = v.at(k, i);
        r.vectors.push_back(std::move(vec));
    }
    return r;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// PCA
// ---------------------------------------------------------------------------

struct PcaModel {
    std::vector<std::string> features;
    std::vector<double> means;
    std::vector<double> scales;  // all 1.0 unless standardize was requested
    bool standardized = false;
    // components[i] is the i-th orthonormal direction in feature space,
    // ordered by descending eigenvalue.
    std::vector<std::vector<double>> components;
    std::vector<double> eigenvalues;
    std::vector<double> explained_variance_ratio;
    std::size_t n_components = 0;  // components retained for projection
};

struct Projection {
    Matrix points;            // row i = coordinates of dataset row i
    std::vector<int> labels;  // defect label per row
};

// Mean-centered (optionally variance-scaled) eigendecomposition of the
// sample covariance, with a deterministic sign convention: the largest-
// magnitude coordinate of each component is positive.
inline PcaModel fit_pca(const Dataset& d, const std::vector<std::string>& features,
                        std::size_t n_components, bool standardize = false) {
    const std::size_t p = features.size();
    const std::size_t n = d.n_rows();
    if (p == 0) fail(errc::dim, "no features requested");
    if (n_components > p)
        fail(errc::dim, "n_components " + std::to_string(n_components) + " exceeds feature count " +
                            std::to_string(p));
    if (n < 2) fail(errc::degenerate, "need at least 2 rows, got " + std::to_string(n));
    if (p > n) fail(errc::dim, "feature count exceeds row count");

    Matrix x = d.feature_matrix(features);  // throws E_UNKNOWN_FEATURE

    PcaModel model;
    model.features = features;
    model.standardized = standardize;
    model.means.assign(p, 0.0);
    model.scales.assign(p, 1.0);
    for (std::size_t c = 0; c < p; ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < n; ++r) sum += x.at(r, c);
        model.means[c] = sum / static_cast<double>(n);
    }
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < p; ++c) x.at(r, c) -= model.means[c];
    }
    if (standardize) {
        for (std::size_t c = 0; c < p; ++c) {
            double ss = 0.0;
            for (std::size_t r = 0; r < n; ++r) ss += x.at(r, c) * x.at(r, c);
            double sd = std::sqrt(ss / static_cast<double>(n - 1));
            if (sd > 0.0) {
                model.scales[c] = sd;
                for (std::size_t r = 0; r < n; ++r) x.at(r, c) /= sd;
            }
            // zero-variance columns stay centered only
        }
    }

    Matrix cov(p, p);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i; j < p; ++j) {
            double sum = 0.0;
            for (std::size_t r = 0; r < n; ++r) sum += x.at(r, i) * x.at(r, j);
            double v = sum / static_cast<double>(n - 1);
            cov.at(i, j) = v;
            cov.at(j, i) = v;
        }
    }

    auto eig = detail::jacobi_eigen(cov);

    double total = 0.0;
    for (double ev : eig.values) total += ev;
    if (!(total > 0.0)) fail(errc::degenerate, "zero total variance over the requested features");

    model.eigenvalues = eig.values;
    model.components = std::move(eig.vectors);
    for (auto& comp : model.components) {
        std::size_t arg = 0;
        for (std::size_t i = 1; i < comp.size(); ++i) {
            if (std::abs(comp[i]) > std::abs(comp[arg])) arg = i;
        }
        if (comp[arg] < 0.0) {
            for (double& v : comp) v = -v;
        }
    }
    model.explained_variance_ratio.reserve(p);
    for (double ev : eig.values) model.explained_variance_ratio.push_back(ev / total);
    model.n_components = n_components;
    return model;
}

// Coordinates of each row along the model's first n_components directions.
// Projecting the fitting data yields per-axis mean 0.
inline Projection project(const PcaModel& m, const Dataset& d) {
    for (const auto& f : m.features) {
        if (!d.has_feature(f))
            fail(errc::feature_mismatch, "dataset lacks feature '" + f + "' used by the model");
    }
    Matrix x = d.feature_matrix(m.features);
    const std::size_t k = m.n_components;
    Projection proj;
    proj.points = Matrix(d.n_rows(), k);
    proj.labels.assign(d.labels().begin(), d.labels().end());
    for (std::size_t r = 0; r < x.rows; ++r) {
        for (std::size_t j = 0; j < k; ++j) {
            const auto& comp = m.components[j];
            double dot = 0.0;
            for (std::size_t c = 0; c < m.features.size(); ++c) {
                dot += (x.at(r, c) - m.means[c]) / m.scales[c] * comp[c];
            }
            proj.points.at(r, j) = dot;
        }
    }
    return proj;
}

// Inverse map for verification: coords * components^T, unscaled, plus means.
inline Matrix reconstruct(const PcaModel& m, const Matrix& coords) {
    const std::size_t p = m.features.size();
    Matrix out(coords.rows, p);
    for (std::size_t r = 0; r < coords.rows; ++r) {
        for (std::size_t c = 0; c < p; ++c) {
            double v = 0.0;
            for (std::size_t j = 0; j < coords.cols; ++j) v += coords.at(r, j) * m.components[j][c];
            out.at(r, c) = v * m.scales[c] + m.means[c];
        }
    }
    return out;
}

// Scatter CSV for external plotters: pc1..pck, then the defect label.
inline void export_scatter(const Projection& p, const std::string& path) {
    if (p.points.cols == 0) fail(errc::dim, "projection has no components");
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(errc::io, "cannot write '" + path + "'");
    for (std::size_t j = 0; j < p.points.cols; ++j) out << "pc" << (j + 1) << ",";
    out << "label\n";
    for (std::size_t r = 0; r < p.points.rows; ++r) {
        for (std::size_t j = 0; j < p.points.cols; ++j)
            out << csv::format_number(p.points.at(r, j)) << ",";
        out << p.labels[r] << "\n";
    }
    if (!out) fail(errc::io, "write failed for '" + path + "'");
}

// Inspection dump: eigenvalues, variance ratios, and per-component loadings
// ranked by magnitude. Which raw features "drive" a component is left to the
// reader; this only orders the evidence.
inline std::string describe_loadings(const PcaModel& m) {
    std::string out;
    out += "features:";
    for (const auto& f : m.features) out += " " + f;
    out += "\nmeans:";
    for (double v : m.means) out += " " + csv::format_number(v);
    if (m.standardized) {
        out += "\nscales:";
        for (double v : m.scales) out += " " + csv::format_number(v);
    }
    out += "\n";
    for (std::size_t j = 0; j < m.components.size(); ++j) {
        out += "component " + std::to_string(j + 1) + ": eigenvalue=" +
               csv::format_number(m.eigenvalues[j]) +
               " variance_ratio=" + csv::format_number(m.explained_variance_ratio[j]) + "\n";
        std::vector<std::size_t> order(m.features.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return std::abs(m.components[j][a]) > std::abs(m.components[j][b]);
        });
        for (std::size_t i : order) {
            out += "  " + m.features[i] + " " + csv::format_number(m.components[j][i]) + "\n";
        }
    }
    return out;
}

}  // namespace jitdp
