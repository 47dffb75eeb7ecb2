#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "jitdp/dataset.hpp"
#include "jitdp/error.hpp"
#include "jitdp/rng.hpp"

namespace jitdp {

// ---------------------------------------------------------------------------
// Transform configuration
// ---------------------------------------------------------------------------

enum class LogMode {
    strict,  // ln(x); any x <= 0 aborts with the full offender list
    log1p,   // ln(1+x); finite for all x >= 0
};

inline const char* log_mode_name(LogMode m) { return m == LogMode::strict ? "strict" : "log1p"; }

inline LogMode log_mode_from_name(const std::string& s) {
    if (s == "strict") return LogMode::strict;
    if (s == "log1p") return LogMode::log1p;
    fail(errc::spec, "unknown log mode '" + s + "' (strict|log1p)");
}

// The standard training-feature pipeline: which columns get a natural log,
// which columns are excluded from training features, and whether min-max
// normalization runs afterwards.
struct TransformPlan {
    std::vector<std::string> log_columns = {"ns", "nf", "ndev", "nuc", "exp", "rexp", "sexp"};
    LogMode log_mode = LogMode::strict;
    // nd duplicates nf, rexp duplicates exp, and la/ld are reserved for
    // effort sorting; all four are kept out of training features.
    std::vector<std::string> drop_columns = {"nd", "rexp", "la", "ld"};
    bool normalize = true;

    // Requested features minus the drop list, order preserved.
    std::vector<std::string> training_features(const std::vector<std::string>& requested) const {
        std::vector<std::string> out;
        for (const auto& f : requested) {
            if (std::find(drop_columns.begin(), drop_columns.end(), f) == drop_columns.end())
                out.push_back(f);
        }
        return out;
    }
};

struct NormalizationParams {
    std::vector<std::string> columns;
    std::vector<double> min;
    std::vector<double> max;
};

struct SplitSpec {
    double train_fraction = 0.9;
    std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// Uniform undersampling of the majority class down to the minority count.
// Minority rows are all retained; the result order is a seeded shuffle.
inline Dataset undersample(const Dataset& d, std::uint64_t seed) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        (d.label(i) == 1 ? pos : neg).push_back(i);
    }
    if (pos.empty() || neg.empty())
        fail(errc::one_class, "undersampling needs both classes (defective=" + std::to_string(pos.size()) +
                                  ", clean=" + std::to_string(neg.size()) + ")");
    Rng rng(seed);
    auto& majority = pos.size() >= neg.size() ? pos : neg;
    auto& minority = pos.size() >= neg.size() ? neg : pos;
    std::vector<std::size_t> kept = rng.sample_without_replacement(majority, minority.size());
    kept.insert(kept.end(), minority.begin(), minority.end());
    rng.shuffle(kept);
    return d.with_rows(kept);
}

// Natural-log transform of the plan's columns. Strict mode reports every
// offending cell before giving up; log1p never fails on non-negative data.
inline Dataset log_transform(const Dataset& d, const TransformPlan& plan) {
    std::vector<std::string> offenders;
    Dataset out = d;
    for (const auto& name : plan.log_columns) {
        if (!out.has_feature(name)) continue;  // plan may cover columns not selected
        std::size_t idx = out.feature_index(name);
        std::vector<double> col = out.column(idx);
        for (std::size_t r = 0; r < col.size(); ++r) {
            if (plan.log_mode == LogMode::strict) {
                if (col[r] <= 0.0) {
                    offenders.push_back("(row " + std::to_string(r) + ", " + name + "=" +
                                        csv::format_number(col[r]) + ")");
                    continue;
                }
                col[r] = std::log(col[r]);
            } else {
                col[r] = std::log1p(col[r]);
            }
        }
        out = out.with_column_replaced(idx, std::move(col));
    }
    if (!offenders.empty()) {
        std::string list = offenders[0];
        for (std::size_t i = 1; i < offenders.size() && i < 20; ++i) list += ", " + offenders[i];
        if (offenders.size() > 20) list += ", ... " + std::to_string(offenders.size() - 20) + " more";
        fail(errc::log_domain,
             std::to_string(offenders.size()) + " non-positive cell(s) under strict log: " + list);
    }
    return out;
}

inline NormalizationParams fit_minmax(const Dataset& d, const std::vector<std::string>& columns) {
    if (d.n_rows() == 0) fail(errc::empty, "cannot fit normalization on an empty dataset");
    NormalizationParams p;
    p.columns = columns;
    const auto& stats = d.column_stats();
    for (const auto& name : columns) {
        std::size_t idx = d.feature_index(name);
        p.min.push_back(stats[idx].min);
        p.max.push_back(stats[idx].max);
    }
    return p;
}

// (x - min) / (max - min), fitted params. Constant columns map to 0; values
// outside the fitted range (test data) are left unclamped.
inline Dataset apply_minmax(const Dataset& d, const NormalizationParams& p) {
    Dataset out = d;
    for (const auto& name : out.feature_names()) {
        auto it = std::find(p.columns.begin(), p.columns.end(), name);
        if (it == p.columns.end())
            fail(errc::missing_params, "no normalization params for column '" + name + "'");
        std::size_t pi = static_cast<std::size_t>(it - p.columns.begin());
        std::size_t idx = out.feature_index(name);
        double mn = p.min[pi];
        double range = p.max[pi] - mn;
        std::vector<double> col = out.column(idx);
        for (double& v : col) {
            v = range > 0.0 ? (v - mn) / range : 0.0;
        }
        out = out.with_column_replaced(idx, std::move(col));
    }
    return out;
}

// Seeded shuffle, then partition at floor(n * train_fraction); the remainder
// goes to the test side.
inline std::pair<Dataset, Dataset> split(const Dataset& d, const SplitSpec& spec) {
    if (spec.train_fraction <= 0.0 || spec.train_fraction >= 1.0)
        fail(errc::spec, "train_fraction must lie in (0,1)");
    if (d.n_rows() < 2) fail(errc::too_small, "split needs at least 2 rows");
    std::vector<std::size_t> idx(d.n_rows());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(spec.seed);
    rng.shuffle(idx);
    std::size_t n_train = static_cast<std::size_t>(
        std::floor(static_cast<double>(d.n_rows()) * spec.train_fraction));
    std::vector<std::size_t> train_idx(idx.begin(), idx.begin() + n_train);
    std::vector<std::size_t> test_idx(idx.begin() + n_train, idx.end());
    return {d.with_rows(train_idx), d.with_rows(test_idx)};
}

// Balances each source by undersampling, then draws the same number of rows
// from every source (per class, so the 50/50 balance is exact) down to the
// smallest balanced size. Row provenance survives into the combined result.
inline Dataset combine(const std::vector<Dataset>& datasets, std::uint64_t seed) {
    if (datasets.size() < 2) fail(errc::spec, "combine needs at least 2 datasets");
    std::vector<Dataset> balanced;
    balanced.reserve(datasets.size());
    for (std::size_t i = 0; i < datasets.size(); ++i) {
        balanced.push_back(undersample(datasets[i], derive_seed(seed, i)));  // E_ONE_CLASS per source
    }
    std::size_t min_size = balanced[0].n_rows();
    for (const auto& b : balanced) min_size = std::min(min_size, b.n_rows());
    std::size_t per_class = min_size / 2;

    std::vector<std::string> names = balanced[0].feature_names();
    for (const auto& b : balanced) {
        if (b.feature_names() != names) fail(errc::feature_mismatch, "sources carry different feature sets");
    }
    std::vector<std::vector<double>> cols(names.size());
    std::vector<int> labels;
    std::vector<std::string> row_projects;

    for (std::size_t s = 0; s < balanced.size(); ++s) {
        const Dataset& b = balanced[s];
        std::vector<std::size_t> pos, neg;
        for (std::size_t i = 0; i < b.n_rows(); ++i) (b.label(i) == 1 ? pos : neg).push_back(i);
        Rng rng(derive_seed(seed, 1000 + s));
        std::vector<std::size_t> take = rng.sample_without_replacement(pos, per_class);
        std::vector<std::size_t> take_neg = rng.sample_without_replacement(neg, per_class);
        take.insert(take.end(), take_neg.begin(), take_neg.end());
        Dataset part = b.with_rows(take);
        for (std::size_t c = 0; c < names.size(); ++c) {
            const auto& col = part.column(c);
            cols[c].insert(cols[c].end(), col.begin(), col.end());
        }
        labels.insert(labels.end(), part.labels().begin(), part.labels().end());
        for (std::size_t i = 0; i < part.n_rows(); ++i) row_projects.push_back(part.row_project(i));
    }

    Dataset merged(std::move(names), std::move(cols), std::move(labels), "combined", {},
                   std::move(row_projects));
    std::vector<std::size_t> order(merged.n_rows());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, 999983));
    rng.shuffle(order);
    return merged.with_rows(order);
}

}  // namespace jitdp
