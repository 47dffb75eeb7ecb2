#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "jitdp/dataset.hpp"
#include "jitdp/error.hpp"
#include "jitdp/metrics.hpp"
#include "jitdp/pipeline.hpp"
#include "jitdp/preprocess.hpp"

namespace jitdp {

// ---------------------------------------------------------------------------
// Fold construction
// ---------------------------------------------------------------------------

struct FoldPlan {
    std::size_t k = 10;
    std::uint64_t seed = 0;
    bool stratified = false;
    std::vector<std::vector<std::size_t>> folds;  // row indices per fold
};

// Seeded partition into k folds with sizes differing by at most one. The
// stratified variant deals each class around the fold cycle, picking up where
// the previous class stopped so the size bound still holds overall.
inline FoldPlan make_folds(std::span<const int> labels, std::size_t k, std::uint64_t seed,
                           bool stratified = false) {
    const std::size_t n = labels.size();
    if (k < 2) fail(errc::spec, "k must be >= 2");
    if (n < k) fail(errc::too_small, "need at least k=" + std::to_string(k) + " rows, got " + std::to_string(n));
    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.stratified = stratified;
    plan.folds.assign(k, {});
    Rng rng(seed);
    if (!stratified) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        rng.shuffle(idx);
        std::size_t base = n / k, extra = n % k, cursor = 0;
        for (std::size_t f = 0; f < k; ++f) {
            std::size_t size = base + (f < extra ? 1 : 0);
            plan.folds[f].assign(idx.begin() + cursor, idx.begin() + cursor + size);
            cursor += size;
        }
    } else {
        std::vector<std::size_t> pos, neg;
        for (std::size_t i = 0; i < n; ++i) (labels[i] == 1 ? pos : neg).push_back(i);
        rng.shuffle(pos);
        rng.shuffle(neg);
        std::size_t cursor = 0;
        for (std::size_t i : pos) plan.folds[cursor++ % k].push_back(i);
        for (std::size_t i : neg) plan.folds[cursor++ % k].push_back(i);
    }
    return plan;
}

// ---------------------------------------------------------------------------
// Cross-validation
// ---------------------------------------------------------------------------

struct FoldMetrics {
    std::size_t repetition = 0;
    std::size_t fold = 0;
    ConfusionCounts counts;
    // NaN when the fold left the ratio undefined (no positives held out, or
    // nothing predicted positive).
    double recall = std::numeric_limits<double>::quiet_NaN();
    double precision = std::numeric_limits<double>::quiet_NaN();
};

inline double mean_defined(const std::vector<FoldMetrics>& folds, double FoldMetrics::*field) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& f : folds) {
        double v = f.*field;
        if (!std::isnan(v)) {
            sum += v;
            ++count;
        }
    }
    return count == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(count);
}

struct CvResult {
    std::vector<FoldMetrics> folds;
    double mean_recall = std::numeric_limits<double>::quiet_NaN();
    double mean_precision = std::numeric_limits<double>::quiet_NaN();
};

// One pass of k-fold cross-validation. Each fold's training portion goes
// through the full training pipeline (undersample, log, fit min-max, train a
// fresh model); the held-out fold gets the identical transforms with the
// train-fitted normalization and is never resampled. Per-fold seeds are
// plan_seed + fold_index.
inline CvResult kfold_cv(const Dataset& train, const std::vector<std::string>& features,
                         const TransformPlan& plan, const TrainConfig& train_cfg, std::size_t k,
                         std::uint64_t seed, bool stratified = false, double threshold = 0.5,
                         std::size_t repetition_tag = 0) {
    if (train.count_label(0) == 0 || train.count_label(1) == 0)
        fail(errc::one_class, "cross-validation input holds a single class");
    FoldPlan fold_plan = make_folds(train.labels(), k, seed, stratified);

    CvResult result;
    result.folds.reserve(k);
    std::vector<char> in_fold(train.n_rows(), 0);
    for (std::size_t f = 0; f < k; ++f) {
        std::fill(in_fold.begin(), in_fold.end(), 0);
        for (std::size_t i : fold_plan.folds[f]) in_fold[i] = 1;
        std::vector<std::size_t> train_idx;
        train_idx.reserve(train.n_rows() - fold_plan.folds[f].size());
        for (std::size_t i = 0; i < train.n_rows(); ++i) {
            if (!in_fold[i]) train_idx.push_back(i);
        }
        Dataset fold_train = train.with_rows(train_idx);
        Dataset fold_val = train.with_rows(fold_plan.folds[f]);

        std::uint64_t fold_seed = seed + f;
        FittedPipeline pipeline = fit_pipeline(fold_train, features, plan, train_cfg, fold_seed);

        std::vector<double> scores = pipeline_score(pipeline, fold_val);
        FoldMetrics fm;
        fm.repetition = repetition_tag;
        fm.fold = f;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            bool predicted = scores[i] >= threshold;
            bool actual = fold_val.label(i) == 1;
            if (predicted && actual) ++fm.counts.tp;
            else if (predicted && !actual) ++fm.counts.fp;
            else if (!predicted && actual) ++fm.counts.fn;
            else ++fm.counts.tn;
        }
        if (fm.counts.tp + fm.counts.fn > 0) fm.recall = recall(fm.counts);
        if (fm.counts.tp + fm.counts.fp > 0) fm.precision = precision(fm.counts);
        result.folds.push_back(fm);
    }
    result.mean_recall = mean_defined(result.folds, &FoldMetrics::recall);
    result.mean_precision = mean_defined(result.folds, &FoldMetrics::precision);
    return result;
}

// ---------------------------------------------------------------------------
// Experiment grids
// ---------------------------------------------------------------------------

struct HoldoutSpec {
    bool enabled = true;
    double train_fraction = 0.9;
};

// Full grid description: dataset sources, feature combinations, transform
// plan, training config, CV shape, repetitions. Everything that consumes
// randomness derives its seed from `seed`, so one integer pins the run.
struct ExperimentSpec {
    std::string name = "experiment";
    std::vector<std::string> dataset_paths;
    std::vector<std::vector<std::string>> combinations;
    TransformPlan plan;
    TrainConfig train;
    std::size_t folds_k = 10;
    bool stratified = false;
    std::size_t repetitions = 1;
    std::uint64_t seed = 0;
    HoldoutSpec holdout;
    double threshold = 0.5;

    void validate() const {
        if (combinations.empty()) fail(errc::spec, "experiment lists zero feature combinations");
        for (const auto& combo : combinations) {
            if (combo.empty()) fail(errc::spec, "empty feature combination");
            for (const auto& f : combo) {
                if (!ColumnSchema::is_canonical(f) || f == ColumnSchema::label_column)
                    fail(errc::spec, "unknown feature '" + f + "' in combination");
            }
        }
        if (repetitions < 1) fail(errc::spec, "repetitions must be >= 1");
        if (folds_k < 2) fail(errc::spec, "folds k must be >= 2");
        if (threshold < 0.0 || threshold > 1.0) fail(errc::spec, "threshold must lie in [0,1]");
        if (holdout.enabled && !(holdout.train_fraction > 0.0 && holdout.train_fraction < 1.0))
            fail(errc::spec, "holdout train_fraction must lie in (0,1)");
        train.validate();
    }
};

inline std::string join_features(const std::vector<std::string>& features) {
    std::string out;
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (i) out.push_back(',');
        out += features[i];
    }
    return out;
}

struct CombinationResult {
    std::vector<std::string> features;   // requested
    std::vector<std::string> effective;  // after the plan's drop list
    std::vector<FoldMetrics> folds;      // repetitions x k entries
    double mean_recall = std::numeric_limits<double>::quiet_NaN();
    double mean_precision = std::numeric_limits<double>::quiet_NaN();

    double repetition_mean_recall(std::size_t rep) const {
        std::vector<FoldMetrics> subset;
        for (const auto& f : folds) {
            if (f.repetition == rep) subset.push_back(f);
        }
        return mean_defined(subset, &FoldMetrics::recall);
    }
    double repetition_mean_precision(std::size_t rep) const {
        std::vector<FoldMetrics> subset;
        for (const auto& f : folds) {
            if (f.repetition == rep) subset.push_back(f);
        }
        return mean_defined(subset, &FoldMetrics::precision);
    }
};

struct ExperimentReport {
    ExperimentSpec spec;  // defaults resolved; echoed into every emission
    std::string dataset_name;
    std::size_t n_total = 0;
    std::size_t n_cv = 0;       // rows the CV ran on
    std::size_t n_holdout = 0;  // rows reserved, untouched by this report
    std::vector<CombinationResult> results;  // descending mean recall
};

// Runs the grid on an already loaded (and possibly combined) dataset:
// optional holdout split, then per combination x repetition one k-fold CV.
// Repetition r uses seed spec.seed + r for its fold partition and training.
inline ExperimentReport run_experiment(const ExperimentSpec& spec, const Dataset& data) {
    spec.validate();
    ExperimentReport report;
    report.spec = spec;
    report.dataset_name = data.project();
    report.n_total = data.n_rows();

    Dataset cv_data = data;
    if (spec.holdout.enabled) {
        auto [train_part, holdout_part] =
            split(data, SplitSpec{spec.holdout.train_fraction, derive_seed(spec.seed, 7001)});
        cv_data = train_part;
        report.n_holdout = holdout_part.n_rows();
    }
    report.n_cv = cv_data.n_rows();

    for (const auto& combo : spec.combinations) {
        CombinationResult cr;
        cr.features = combo;
        cr.effective = spec.plan.training_features(combo);
        for (std::size_t rep = 0; rep < spec.repetitions; ++rep) {
            std::uint64_t rep_seed = spec.seed + rep;
            CvResult cv;
            try {
                cv = kfold_cv(cv_data, combo, spec.plan, spec.train, spec.folds_k, rep_seed,
                              spec.stratified, spec.threshold, rep);
            } catch (const Error& e) {
                fail(e.code(), "combination '" + join_features(combo) + "': " + e.what());
            }
            cr.folds.insert(cr.folds.end(), cv.folds.begin(), cv.folds.end());
        }
        cr.mean_recall = mean_defined(cr.folds, &FoldMetrics::recall);
        cr.mean_precision = mean_defined(cr.folds, &FoldMetrics::precision);
        report.results.push_back(std::move(cr));
    }

    std::stable_sort(report.results.begin(), report.results.end(),
                     [](const CombinationResult& a, const CombinationResult& b) {
                         double ra = std::isnan(a.mean_recall)
                                         ? -std::numeric_limits<double>::infinity()
                                         : a.mean_recall;
                         double rb = std::isnan(b.mean_recall)
                                         ? -std::numeric_limits<double>::infinity()
                                         : b.mean_recall;
                         return ra > rb;
                     });
    return report;
}

// ---------------------------------------------------------------------------
// Effort-aware ranking
// ---------------------------------------------------------------------------

constexpr double kEffortEpsilon = 1e-6;

struct EffortRankedRow {
    std::size_t row = 0;        // index into the input dataset
    double probability = 0.0;   // model score Y(x)
    double effort = 0.0;        // la + ld as stored in the dataset
    double score = 0.0;         // probability / max(effort, epsilon)
    bool raw_churn = false;     // la/ld stored raw (lt = 0 with churn)
};

// Descending Y(x)/Effort(x) with the epsilon floor for zero-effort rows;
// stable, so equal scores keep their original order. The effort values are
// the dataset's la/ld as stored, including the raw-churn rows, which is why
// each row carries the raw_churn flag.
inline std::vector<EffortRankedRow> effort_rank(const Dataset& d, std::span<const double> probabilities) {
    if (probabilities.size() != d.n_rows()) fail(errc::dim, "need one probability per row");
    const auto& la = d.column("la");
    const auto& ld = d.column("ld");
    const std::vector<double>* lt = d.has_feature("lt") ? &d.column("lt") : nullptr;
    std::vector<EffortRankedRow> rows;
    rows.reserve(d.n_rows());
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        EffortRankedRow r;
        r.row = i;
        r.probability = probabilities[i];
        r.effort = la[i] + ld[i];
        r.score = r.probability / std::max(r.effort, kEffortEpsilon);
        r.raw_churn = lt && (*lt)[i] == 0.0 && (la[i] > 0.0 || ld[i] > 0.0);
        rows.push_back(r);
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const EffortRankedRow& a, const EffortRankedRow& b) { return a.score > b.score; });
    return rows;
}

}  // namespace jitdp
