#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "jitdp/csv.hpp"
#include "jitdp/error.hpp"
#include "jitdp/evaluate.hpp"
#include "jitdp/pipeline.hpp"

namespace jitdp {

// Ordered JSON keeps key order stable, which makes every emitted config and
// model byte-reproducible.
using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Transform plan / train config
// ---------------------------------------------------------------------------

inline ojson plan_to_json(const TransformPlan& p) {
    return ojson{{"log_columns", p.log_columns},
                 {"log_mode", log_mode_name(p.log_mode)},
                 {"drop_columns", p.drop_columns},
                 {"normalize", p.normalize}};
}

inline TransformPlan plan_from_json(const ojson& j) {
    TransformPlan p;
    p.log_columns = j.value("log_columns", p.log_columns);
    p.log_mode = log_mode_from_name(j.value("log_mode", std::string(log_mode_name(p.log_mode))));
    p.drop_columns = j.value("drop_columns", p.drop_columns);
    p.normalize = j.value("normalize", p.normalize);
    return p;
}

inline ojson train_to_json(const TrainConfig& c) {
    return ojson{{"epochs", c.epochs},
                 {"learning_rate", c.learning_rate},
                 {"dropout_p", c.dropout_p},
                 {"dropout_layers", dropout_placement_name(c.dropout_layers)},
                 {"beta1", c.beta1},
                 {"beta2", c.beta2},
                 {"epsilon", c.epsilon},
                 {"batch_size", c.batch_size}};
}

inline TrainConfig train_from_json(const ojson& j) {
    TrainConfig c;
    c.epochs = j.value("epochs", c.epochs);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.dropout_p = j.value("dropout_p", c.dropout_p);
    c.dropout_layers = dropout_placement_from_name(
        j.value("dropout_layers", std::string(dropout_placement_name(c.dropout_layers))));
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.batch_size = j.value("batch_size", c.batch_size);
    return c;
}

// ---------------------------------------------------------------------------
// Experiment spec
// ---------------------------------------------------------------------------

// Every field is echoed explicitly, defaults resolved, so an emitted config
// re-runs the identical experiment.
inline ojson experiment_to_json(const ExperimentSpec& s) {
    return ojson{{"name", s.name},
                 {"datasets", s.dataset_paths},
                 {"combinations", s.combinations},
                 {"plan", plan_to_json(s.plan)},
                 {"train", train_to_json(s.train)},
                 {"folds", ojson{{"k", s.folds_k}, {"stratified", s.stratified}}},
                 {"repetitions", s.repetitions},
                 {"seed", s.seed},
                 {"holdout", ojson{{"enabled", s.holdout.enabled},
                                   {"train_fraction", s.holdout.train_fraction}}},
                 {"threshold", s.threshold}};
}

// Feature names are canonicalized here (case and aliases), so echoes always
// carry canonical names.
inline ExperimentSpec experiment_from_json(const ojson& j,
                                           const ColumnSchema& schema = ColumnSchema::standard()) {
    ExperimentSpec s;
    s.name = j.value("name", s.name);
    s.dataset_paths = j.value("datasets", s.dataset_paths);
    if (j.contains("combinations")) {
        s.combinations.clear();
        for (const auto& combo : j.at("combinations")) {
            std::vector<std::string> features;
            for (const auto& f : combo) {
                std::string canonical = schema.resolve(f.get<std::string>());
                if (canonical.empty())
                    fail(errc::spec, "unknown feature '" + f.get<std::string>() + "' in combination");
                features.push_back(canonical);
            }
            s.combinations.push_back(std::move(features));
        }
    }
    if (j.contains("plan")) s.plan = plan_from_json(j.at("plan"));
    if (j.contains("train")) s.train = train_from_json(j.at("train"));
    if (j.contains("folds")) {
        s.folds_k = j.at("folds").value("k", s.folds_k);
        s.stratified = j.at("folds").value("stratified", s.stratified);
    }
    s.repetitions = j.value("repetitions", s.repetitions);
    s.seed = j.value("seed", s.seed);
    if (j.contains("holdout")) {
        s.holdout.enabled = j.at("holdout").value("enabled", s.holdout.enabled);
        s.holdout.train_fraction = j.at("holdout").value("train_fraction", s.holdout.train_fraction);
    }
    s.threshold = j.value("threshold", s.threshold);
    return s;
}

inline ExperimentSpec load_experiment_spec(const std::string& path,
                                           const ColumnSchema& schema = ColumnSchema::standard()) {
    std::ifstream in(path);
    if (!in) fail(errc::io, "cannot open '" + path + "'");
    ojson j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        fail(errc::parse, "invalid JSON in '" + path + "': " + e.what());
    }
    return experiment_from_json(j, schema);
}

// ---------------------------------------------------------------------------
// Pipeline bundle (model + transforms)
// ---------------------------------------------------------------------------

namespace detail {

inline ojson weights_to_json(const MlpModel& m, std::size_t offset, std::size_t rows, std::size_t cols) {
    ojson out = ojson::array();
    for (std::size_t r = 0; r < rows; ++r) {
        ojson row = ojson::array();
        for (std::size_t c = 0; c < cols; ++c) row.push_back(m.params[offset + r * cols + c]);
        out.push_back(std::move(row));
    }
    return out;
}

inline void weights_from_json(const ojson& j, MlpModel& m, std::size_t offset, std::size_t rows,
                              std::size_t cols, const char* name) {
    if (!j.is_array() || j.size() != rows)
        fail(errc::parse, std::string("model block '") + name + "' has wrong row count");
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols)
            fail(errc::parse, std::string("model block '") + name + "' has wrong column count");
        for (std::size_t c = 0; c < cols; ++c) m.params[offset + r * cols + c] = j[r][c].get<double>();
    }
}

inline ojson vector_to_json(const MlpModel& m, std::size_t offset, std::size_t n) {
    ojson out = ojson::array();
    for (std::size_t i = 0; i < n; ++i) out.push_back(m.params[offset + i]);
    return out;
}

inline void vector_from_json(const ojson& j, MlpModel& m, std::size_t offset, std::size_t n,
                             const char* name) {
    if (!j.is_array() || j.size() != n)
        fail(errc::parse, std::string("model block '") + name + "' has wrong length");
    for (std::size_t i = 0; i < n; ++i) m.params[offset + i] = j[i].get<double>();
}

}  // namespace detail

inline ojson mlp_to_json(const MlpModel& m) {
    const ParamLayout l = m.layout();
    return ojson{{"input_dim", m.spec.input_dim},
                 {"hidden", {LayerSpec::hidden1, LayerSpec::hidden2}},
                 {"activations", {"tanh", "relu", "identity"}},
                 {"init_seed", m.init_seed},
                 {"w1", detail::weights_to_json(m, l.w1, m.spec.input_dim, LayerSpec::hidden1)},
                 {"b1", detail::vector_to_json(m, l.b1, LayerSpec::hidden1)},
                 {"w2", detail::weights_to_json(m, l.w2, LayerSpec::hidden1, LayerSpec::hidden2)},
                 {"b2", detail::vector_to_json(m, l.b2, LayerSpec::hidden2)},
                 {"w3", detail::weights_to_json(m, l.w3, LayerSpec::hidden2, 1)},
                 {"b3", detail::vector_to_json(m, l.b3, 1)}};
}

inline MlpModel mlp_from_json(const ojson& j) {
    MlpModel m;
    m.spec.input_dim = j.at("input_dim").get<std::size_t>();
    if (m.spec.input_dim < 1) fail(errc::parse, "model input_dim must be >= 1");
    m.init_seed = j.value("init_seed", std::uint64_t{0});
    const ParamLayout l = m.layout();
    m.params.assign(l.total, 0.0);
    detail::weights_from_json(j.at("w1"), m, l.w1, m.spec.input_dim, LayerSpec::hidden1, "w1");
    detail::vector_from_json(j.at("b1"), m, l.b1, LayerSpec::hidden1, "b1");
    detail::weights_from_json(j.at("w2"), m, l.w2, LayerSpec::hidden1, LayerSpec::hidden2, "w2");
    detail::vector_from_json(j.at("b2"), m, l.b2, LayerSpec::hidden2, "b2");
    detail::weights_from_json(j.at("w3"), m, l.w3, LayerSpec::hidden2, 1, "w3");
    detail::vector_from_json(j.at("b3"), m, l.b3, 1, "b3");
    return m;
}

inline ojson pipeline_to_json(const FittedPipeline& p) {
    ojson norm;
    if (p.plan.normalize) {
        norm = ojson{{"columns", p.normalization.columns},
                     {"min", p.normalization.min},
                     {"max", p.normalization.max}};
    } else {
        norm = nullptr;
    }
    return ojson{{"format", "jitdp-pipeline"},
                 {"version", 1},
                 {"features", p.features},
                 {"plan", plan_to_json(p.plan)},
                 {"normalization", norm},
                 {"threshold", p.threshold},
                 {"seed", p.seed},
                 {"model", mlp_to_json(p.model)}};
}

inline FittedPipeline pipeline_from_json(const ojson& j) {
    if (j.value("format", std::string{}) != "jitdp-pipeline")
        fail(errc::parse, "not a jitdp-pipeline file");
    FittedPipeline p;
    p.features = j.at("features").get<std::vector<std::string>>();
    p.plan = plan_from_json(j.at("plan"));
    if (j.contains("normalization") && !j.at("normalization").is_null()) {
        const auto& n = j.at("normalization");
        p.normalization.columns = n.at("columns").get<std::vector<std::string>>();
        p.normalization.min = n.at("min").get<std::vector<double>>();
        p.normalization.max = n.at("max").get<std::vector<double>>();
    }
    p.threshold = j.value("threshold", 0.5);
    p.seed = j.value("seed", std::uint64_t{0});
    p.model = mlp_from_json(j.at("model"));
    if (p.model.spec.input_dim != p.features.size())
        fail(errc::parse, "model input_dim does not match the feature list");
    return p;
}

inline void save_pipeline(const FittedPipeline& p, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(errc::io, "cannot write '" + path + "'");
    out << pipeline_to_json(p).dump(2) << "\n";
    if (!out) fail(errc::io, "write failed for '" + path + "'");
}

inline FittedPipeline load_pipeline(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(errc::io, "cannot open '" + path + "'");
    ojson j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        fail(errc::parse, "invalid JSON in '" + path + "': " + e.what());
    }
    return pipeline_from_json(j);
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

namespace detail {

inline std::string metric_cell(double v) { return std::isnan(v) ? std::string{} : csv::format_number(v); }

inline std::string percent(double v) {
    if (std::isnan(v)) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f%%", v * 100.0);
    return buf;
}

}  // namespace detail

// Machine-readable report: config echo in the comment header, one detail row
// per (combination, fold), one summary row per combination.
inline std::string report_to_csv(const ExperimentReport& r) {
    std::ostringstream out;
    out << "# experiment report\n";
    out << "# config " << experiment_to_json(r.spec).dump() << "\n";
    out << "# dataset " << r.dataset_name << " total_rows=" << r.n_total << " cv_rows=" << r.n_cv
        << " holdout_rows=" << r.n_holdout << "\n";
    out << "features,fold,recall,precision\n";
    for (const auto& combo : r.results) {
        std::string features = csv::escape_field(join_features(combo.features));
        for (std::size_t i = 0; i < combo.folds.size(); ++i) {
            const auto& f = combo.folds[i];
            out << features << "," << i << "," << detail::metric_cell(f.recall) << ","
                << detail::metric_cell(f.precision) << "\n";
        }
        out << features << ",mean," << detail::metric_cell(combo.mean_recall) << ","
            << detail::metric_cell(combo.mean_precision) << "\n";
    }
    return out.str();
}

// Human-readable table, descending mean recall, mirroring the results-table
// layout of the reports this tool produces.
inline std::string report_to_text(const ExperimentReport& r) {
    std::ostringstream out;
    out << "experiment: " << r.spec.name << "\n";
    out << "dataset: " << r.dataset_name << " (total=" << r.n_total << ", cv=" << r.n_cv
        << ", holdout=" << r.n_holdout << ")\n";
    out << "config: " << experiment_to_json(r.spec).dump() << "\n\n";
    std::size_t width = 8;
    for (const auto& combo : r.results) width = std::max(width, join_features(combo.features).size());
    out << "features" << std::string(width - 8 + 2, ' ') << "mean_recall  mean_precision  folds\n";
    for (const auto& combo : r.results) {
        std::string features = join_features(combo.features);
        out << features << std::string(width - features.size() + 2, ' ');
        std::string rec = detail::percent(combo.mean_recall);
        std::string prec = detail::percent(combo.mean_precision);
        out << rec << std::string(rec.size() < 11 ? 11 - rec.size() + 2 : 2, ' ');
        out << prec << std::string(prec.size() < 14 ? 14 - prec.size() + 2 : 2, ' ');
        out << combo.folds.size() << "\n";
    }
    return out.str();
}

enum class ReportFormat { csv, text };

inline void emit_report(const ExperimentReport& r, ReportFormat format, const std::string& path) {
    if (r.results.empty()) fail(errc::spec, "report holds no results");
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(errc::io, "cannot write '" + path + "'");
    out << (format == ReportFormat::csv ? report_to_csv(r) : report_to_text(r));
    if (!out) fail(errc::io, "write failed for '" + path + "'");
}

}  // namespace jitdp
