#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jitdp/dataset.hpp"
#include "jitdp/error.hpp"
#include "jitdp/mlp.hpp"
#include "jitdp/preprocess.hpp"
#include "jitdp/rng.hpp"

namespace jitdp {

// A trained classifier together with everything needed to score fresh data
// the same way its training data was prepared: the effective feature list,
// the transform plan, and the train-fitted normalization.
struct FittedPipeline {
    std::vector<std::string> features;  // post-drop, defines the model input order
    TransformPlan plan;
    NormalizationParams normalization;  // empty columns when plan.normalize is false
    MlpModel model;
    double threshold = 0.5;
    std::uint64_t seed = 0;  // base seed the fit derived its stages from
};

// Training-side preparation: select features (minus the plan's drop list),
// undersample to class balance, log-transform, then fit-and-apply min-max.
// Validation/test data must go through pipeline_score instead, which applies
// the same transforms but never resamples.
inline FittedPipeline fit_pipeline(const Dataset& train_data, const std::vector<std::string>& requested,
                                   const TransformPlan& plan, TrainConfig train_cfg, std::uint64_t seed) {
    FittedPipeline p;
    p.features = plan.training_features(requested);
    if (p.features.empty())
        fail(errc::spec, "no training features remain after dropping the plan's excluded columns");
    p.plan = plan;
    p.seed = seed;

    Dataset selected = select_features(train_data, p.features);
    Dataset balanced = undersample(selected, derive_seed(seed, 1));
    Dataset transformed = log_transform(balanced, plan);
    if (plan.normalize) {
        p.normalization = fit_minmax(transformed, p.features);
        transformed = apply_minmax(transformed, p.normalization);
    }

    MlpModel model = init_model(p.features.size(), derive_seed(seed, 2));
    train_cfg.seed = derive_seed(seed, 3);
    p.model = train(std::move(model), transformed, train_cfg).model;
    return p;
}

// Scores for unseen rows: same feature selection and transforms, train-fitted
// normalization, no undersampling, evaluation-mode forward pass.
inline std::vector<double> pipeline_score(const FittedPipeline& p, const Dataset& data) {
    Dataset selected = select_features(data, p.features);
    Dataset transformed = log_transform(selected, p.plan);
    if (p.plan.normalize) transformed = apply_minmax(transformed, p.normalization);
    return forward(p.model, transformed.feature_matrix(p.features));
}

}  // namespace jitdp
