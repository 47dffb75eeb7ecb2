#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "jitdp/dataset.hpp"
#include "jitdp/error.hpp"
#include "jitdp/matrix.hpp"
#include "jitdp/rng.hpp"

namespace jitdp {

// ---------------------------------------------------------------------------
// Network definition
// ---------------------------------------------------------------------------

// Fixed classifier shape: input -> 20 tanh -> 10 ReLU -> 1 linear. The score
// is the sigmoid of the linear output; the squashing lives in the loss and
// prediction, not in the layer.
struct LayerSpec {
    std::size_t input_dim = 0;
    static constexpr std::size_t hidden1 = 20;
    static constexpr std::size_t hidden2 = 10;
};

enum class DropoutPlacement { both, first_only, second_only };

inline const char* dropout_placement_name(DropoutPlacement p) {
    switch (p) {
        case DropoutPlacement::both: return "both";
        case DropoutPlacement::first_only: return "first";
        case DropoutPlacement::second_only: return "second";
    }
    return "both";
}

inline DropoutPlacement dropout_placement_from_name(const std::string& s) {
    if (s == "both") return DropoutPlacement::both;
    if (s == "first") return DropoutPlacement::first_only;
    if (s == "second") return DropoutPlacement::second_only;
    fail(errc::spec, "unknown dropout placement '" + s + "' (both|first|second)");
}

// Training hyperparameters. Loss is fixed: binary cross-entropy on the
// sigmoid of the linear output.
struct TrainConfig {
    std::size_t epochs = 150;
    double learning_rate = 0.001;
    double dropout_p = 0.2;
    DropoutPlacement dropout_layers = DropoutPlacement::both;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t batch_size = 64;
    std::uint64_t seed = 0;

    void validate() const {
        if (dropout_p < 0.0 || dropout_p >= 1.0) fail(errc::spec, "dropout_p must lie in [0,1)");
        if (learning_rate <= 0.0) fail(errc::spec, "learning_rate must be positive");
        if (epochs == 0) fail(errc::spec, "epochs must be >= 1");
        if (batch_size == 0) fail(errc::spec, "batch_size must be >= 1");
    }
};

// Flat parameter vector layout: w1 (input_dim x 20, row-major), b1, w2
// (20 x 10), b2, w3 (10 x 1), b3.
struct ParamLayout {
    std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0, w3 = 0, b3 = 0, total = 0;

    static ParamLayout of(const LayerSpec& spec) {
        ParamLayout l;
        l.w1 = 0;
        l.b1 = l.w1 + spec.input_dim * LayerSpec::hidden1;
        l.w2 = l.b1 + LayerSpec::hidden1;
        l.b2 = l.w2 + LayerSpec::hidden1 * LayerSpec::hidden2;
        l.w3 = l.b2 + LayerSpec::hidden2;
        l.b3 = l.w3 + LayerSpec::hidden2 * 1;
        l.total = l.b3 + 1;
        return l;
    }
};

struct MlpModel {
    LayerSpec spec;
    std::uint64_t init_seed = 0;
    std::vector<double> params;

    ParamLayout layout() const { return ParamLayout::of(spec); }

    bool finite() const {
        for (double p : params) {
            if (!std::isfinite(p)) return false;
        }
        return true;
    }
};

struct AdamState {
    std::vector<double> m;  // first moments
    std::vector<double> v;  // second moments
    std::uint64_t step = 0;

    explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// ---------------------------------------------------------------------------
// Initialization and forward pass
// ---------------------------------------------------------------------------

// Uniform fan-based init in +-sqrt(6/(fan_in+fan_out)) per layer, zero
// biases; identical parameters for identical seeds.
inline MlpModel init_model(std::size_t input_dim, std::uint64_t seed) {
    if (input_dim < 1) fail(errc::dim, "input_dim must be >= 1");
    MlpModel m;
    m.spec.input_dim = input_dim;
    m.init_seed = seed;
    ParamLayout l = m.layout();
    m.params.assign(l.total, 0.0);
    Rng rng(seed);
    auto fill_uniform = [&](std::size_t offset, std::size_t count, std::size_t fan_in, std::size_t fan_out) {
        double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (std::size_t i = 0; i < count; ++i)
            m.params[offset + i] = (2.0 * rng.uniform() - 1.0) * limit;
    };
    fill_uniform(l.w1, input_dim * LayerSpec::hidden1, input_dim, LayerSpec::hidden1);
    fill_uniform(l.w2, LayerSpec::hidden1 * LayerSpec::hidden2, LayerSpec::hidden1, LayerSpec::hidden2);
    fill_uniform(l.w3, LayerSpec::hidden2 * 1, LayerSpec::hidden2, 1);
    return m;
}

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

// Numerically stable binary cross-entropy, expressed on the pre-sigmoid
// output z.
inline double bce_loss(double z, double y) {
    return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

namespace detail {

// Single-row forward keeping every intermediate needed by backprop.
// mult1/mult2 are the dropout multipliers (0 for dropped units, 1/(1-p) for
// survivors, 1 everywhere in evaluation mode).
struct ForwardTrace {
    std::vector<double> a1;     // tanh outputs
    std::vector<double> used1;  // a1 after dropout
    std::vector<double> s2;     // second-layer pre-activations
    std::vector<double> used2;  // relu outputs after dropout
    std::vector<double> mult1;
    std::vector<double> mult2;
    double z = 0.0;  // linear output
};

inline void forward_row(const MlpModel& m, std::span<const double> x, ForwardTrace& t) {
    const ParamLayout l = m.layout();
    const std::size_t in = m.spec.input_dim;
    const std::size_t h1 = LayerSpec::hidden1;
    const std::size_t h2 = LayerSpec::hidden2;
    t.a1.assign(h1, 0.0);
    t.used1.assign(h1, 0.0);
    t.s2.assign(h2, 0.0);
    t.used2.assign(h2, 0.0);

    for (std::size_t j = 0; j < h1; ++j) {
        double s = m.params[l.b1 + j];
        for (std::size_t i = 0; i < in; ++i) s += x[i] * m.params[l.w1 + i * h1 + j];
        t.a1[j] = std::tanh(s);
        t.used1[j] = t.a1[j] * t.mult1[j];
    }
    for (std::size_t j = 0; j < h2; ++j) {
        double s = m.params[l.b2 + j];
        for (std::size_t k = 0; k < h1; ++k) s += t.used1[k] * m.params[l.w2 + k * h2 + j];
        t.s2[j] = s;
        t.used2[j] = (s > 0.0 ? s : 0.0) * t.mult2[j];
    }
    double z = m.params[l.b3];
    for (std::size_t j = 0; j < h2; ++j) z += t.used2[j] * m.params[l.w3 + j];
    t.z = z;
}

// Accumulates dLoss/dParams for one row into grads, where the row's loss
// contribution is weight * bce(z, y).
inline void backward_row(const MlpModel& m, std::span<const double> x, double y, double weight,
                         const ForwardTrace& t, std::vector<double>& grads) {
    const ParamLayout l = m.layout();
    const std::size_t in = m.spec.input_dim;
    const std::size_t h1 = LayerSpec::hidden1;
    const std::size_t h2 = LayerSpec::hidden2;

    double dz = (sigmoid(t.z) - y) * weight;
    grads[l.b3] += dz;
    std::vector<double> ds2(h2, 0.0);
    for (std::size_t j = 0; j < h2; ++j) {
        grads[l.w3 + j] += t.used2[j] * dz;
        double dused2 = m.params[l.w3 + j] * dz;
        double drelu = dused2 * t.mult2[j];
        ds2[j] = t.s2[j] > 0.0 ? drelu : 0.0;
        grads[l.b2 + j] += ds2[j];
    }
    for (std::size_t k = 0; k < h1; ++k) {
        double dused1 = 0.0;
        for (std::size_t j = 0; j < h2; ++j) {
            grads[l.w2 + k * h2 + j] += t.used1[k] * ds2[j];
            dused1 += m.params[l.w2 + k * h2 + j] * ds2[j];
        }
        double da1 = dused1 * t.mult1[k];
        double ds1 = da1 * (1.0 - t.a1[k] * t.a1[k]);
        grads[l.b1 + k] += ds1;
        for (std::size_t i = 0; i < in; ++i) grads[l.w1 + i * h1 + k] += x[i] * ds1;
    }
}

inline void fill_dropout(Rng& rng, double p, bool active, std::vector<double>& mult, std::size_t n) {
    mult.assign(n, 1.0);
    if (!active || p <= 0.0) return;
    double scale = 1.0 / (1.0 - p);
    for (std::size_t j = 0; j < n; ++j) mult[j] = rng.uniform() < p ? 0.0 : scale;
}

}  // namespace detail

// Scores in (0,1) for a row-major feature block. Dropout runs only in train
// mode; evaluation is a pure function of (model, input).
inline std::vector<double> forward(const MlpModel& m, const Matrix& rows, bool train_mode = false,
                                   std::uint64_t dropout_seed = 0, double dropout_p = 0.2,
                                   DropoutPlacement placement = DropoutPlacement::both) {
    if (rows.cols != m.spec.input_dim)
        fail(errc::dim, "input width " + std::to_string(rows.cols) + " does not match model input_dim " +
                            std::to_string(m.spec.input_dim));
    Rng rng(dropout_seed);
    detail::ForwardTrace t;
    std::vector<double> scores;
    scores.reserve(rows.rows);
    bool drop1 = train_mode && placement != DropoutPlacement::second_only;
    bool drop2 = train_mode && placement != DropoutPlacement::first_only;
    for (std::size_t r = 0; r < rows.rows; ++r) {
        detail::fill_dropout(rng, dropout_p, drop1, t.mult1, LayerSpec::hidden1);
        detail::fill_dropout(rng, dropout_p, drop2, t.mult2, LayerSpec::hidden2);
        detail::forward_row(m, rows.row(r), t);
        scores.push_back(sigmoid(t.z));
    }
    return scores;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

// One bias-corrected moment update over the flat parameter vector.
inline void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
                      const TrainConfig& cfg) {
    state.step += 1;
    double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
        double mhat = state.m[i] / bc1;
        double vhat = state.v[i] / bc2;
        params[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
}

struct TrainResult {
    MlpModel model;
    std::vector<double> loss_trace;  // mean training loss per epoch
};

// Mini-batch training over seeded shuffles. Bit-reproducible for a fixed
// (seed, config, data); throws E_NONFINITE the moment a loss or parameter
// stops being finite, which almost always means unpreprocessed inputs.
inline TrainResult train(MlpModel m, const Matrix& x, std::span<const int> y, TrainConfig cfg) {
    cfg.validate();
    if (x.rows == 0) fail(errc::empty, "training set is empty");
    if (x.cols != m.spec.input_dim)
        fail(errc::dim, "training width " + std::to_string(x.cols) + " does not match model input_dim " +
                            std::to_string(m.spec.input_dim));
    if (y.size() != x.rows) fail(errc::dim, "label count does not match row count");

    const std::size_t n = x.rows;
    const ParamLayout layout = m.layout();
    AdamState state(layout.total);
    Rng shuffle_rng(cfg.seed);
    Rng dropout_rng(derive_seed(cfg.seed, 0xD702));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> grads(layout.total);
    detail::ForwardTrace trace;
    std::vector<double> loss_trace;
    loss_trace.reserve(cfg.epochs);
    bool drop1 = cfg.dropout_layers != DropoutPlacement::second_only;
    bool drop2 = cfg.dropout_layers != DropoutPlacement::first_only;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            std::size_t end = std::min(n, start + cfg.batch_size);
            double inv = 1.0 / static_cast<double>(end - start);
            std::fill(grads.begin(), grads.end(), 0.0);
            double batch_loss = 0.0;
            for (std::size_t b = start; b < end; ++b) {
                std::size_t row = order[b];
                detail::fill_dropout(dropout_rng, cfg.dropout_p, drop1, trace.mult1, LayerSpec::hidden1);
                detail::fill_dropout(dropout_rng, cfg.dropout_p, drop2, trace.mult2, LayerSpec::hidden2);
                detail::forward_row(m, x.row(row), trace);
                double label = static_cast<double>(y[row]);
                batch_loss += bce_loss(trace.z, label);
                detail::backward_row(m, x.row(row), label, inv, trace, grads);
            }
            if (!std::isfinite(batch_loss))
                fail(errc::nonfinite, "training loss became non-finite at epoch " + std::to_string(epoch));
            adam_step(m.params, grads, state, cfg);
            epoch_loss += batch_loss;
        }
        if (!m.finite())
            fail(errc::nonfinite, "parameters became non-finite at epoch " + std::to_string(epoch));
        loss_trace.push_back(epoch_loss / static_cast<double>(n));
    }
    return {std::move(m), std::move(loss_trace)};
}

inline TrainResult train(MlpModel m, const Dataset& d, const TrainConfig& cfg) {
    Matrix x = d.feature_matrix(d.feature_names());
    return train(std::move(m), x, d.labels(), cfg);
}

// ---------------------------------------------------------------------------
// Prediction and verification
// ---------------------------------------------------------------------------

struct Predictions {
    std::vector<int> labels;
    std::vector<double> scores;
};

// Hard labels at the given threshold (score >= threshold reads as positive);
// scores come along for effort-aware ranking.
inline Predictions predict_labels(const MlpModel& m, const Matrix& rows, double threshold = 0.5) {
    Predictions p;
    p.scores = forward(m, rows);
    p.labels.reserve(p.scores.size());
    for (double s : p.scores) p.labels.push_back(s >= threshold ? 1 : 0);
    return p;
}

inline Predictions predict_labels(const MlpModel& m, const Dataset& d, double threshold = 0.5) {
    return predict_labels(m, d.feature_matrix(d.feature_names()), threshold);
}

// Max relative error between analytic gradients and central finite
// differences (step 1e-5) of the single-sample loss, dropout off. The
// denominator floor keeps noise-level gradients from reading as error.
inline double gradient_check(const MlpModel& m, std::span<const double> x, double y) {
    const ParamLayout layout = m.layout();
    detail::ForwardTrace trace;
    trace.mult1.assign(LayerSpec::hidden1, 1.0);
    trace.mult2.assign(LayerSpec::hidden2, 1.0);

    std::vector<double> analytic(layout.total, 0.0);
    detail::forward_row(m, x, trace);
    detail::backward_row(m, x, y, 1.0, trace, analytic);

    const double h = 1e-5;
    MlpModel probe = m;
    double max_rel = 0.0;
    for (std::size_t i = 0; i < layout.total; ++i) {
        double saved = probe.params[i];
        probe.params[i] = saved + h;
        detail::forward_row(probe, x, trace);
        double up = bce_loss(trace.z, y);
        probe.params[i] = saved - h;
        detail::forward_row(probe, x, trace);
        double down = bce_loss(trace.z, y);
        probe.params[i] = saved;
        double numeric = (up - down) / (2.0 * h);
        double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
        max_rel = std::max(max_rel, std::abs(analytic[i] - numeric) / denom);
    }
    return max_rel;
}

}  // namespace jitdp
