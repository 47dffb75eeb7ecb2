#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "jitdp/dataset.hpp"
#include "jitdp/error.hpp"
#include "jitdp/evaluate.hpp"
#include "jitdp/pca.hpp"
#include "jitdp/pipeline.hpp"
#include "jitdp/preprocess.hpp"
#include "jitdp/serialize.hpp"
#include "jitdp/synth.hpp"

namespace jitdp::cli {

// Exit codes: 0 success, 1 error, 2 success with audit findings.
constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitFindings = 2;

namespace detail {

inline std::uint64_t default_seed() {
    if (const char* env = std::getenv("JITDP_SEED")) {
        return std::strtoull(env, nullptr, 10);
    }
    return 0;
}

inline std::vector<std::string> split_csv_list(const std::string& list) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : list) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

// "all" or a comma list; names go through the alias map so pd/nm/npt work.
inline std::vector<std::string> resolve_features(const std::string& arg, const ColumnSchema& schema) {
    if (arg.empty() || ColumnSchema::normalize(arg) == "all") return ColumnSchema::canonical_metrics();
    std::vector<std::string> out;
    for (const auto& name : split_csv_list(arg)) {
        std::string canonical = schema.resolve(name);
        if (canonical.empty() || canonical == ColumnSchema::label_column)
            fail(errc::unknown_feature, "'" + name + "'");
        out.push_back(canonical);
    }
    if (out.empty()) fail(errc::unknown_feature, "feature list is empty");
    return out;
}

inline ColumnSchema schema_with_aliases(const std::vector<std::string>& alias_flags) {
    ColumnSchema schema = ColumnSchema::standard();
    for (const auto& spec : alias_flags) {
        auto eq = spec.find('=');
        if (eq == std::string::npos) fail(errc::spec, "alias must look like name=canonical: " + spec);
        schema.add_alias(spec.substr(0, eq), spec.substr(eq + 1));
    }
    return schema;
}

inline std::string format_pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f%%", v * 100.0);
    return buf;
}

struct PlanFlags {
    std::string log_mode;
    std::string log_columns;
    std::string drop_columns;
    bool no_normalize = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--log-mode", log_mode, "log transform mode: strict|log1p (default strict)");
        cmd->add_option("--log-columns", log_columns, "comma list of columns to log-transform");
        cmd->add_option("--drop-columns", drop_columns,
                        "comma list of columns excluded from training features");
        cmd->add_flag("--no-normalize", no_normalize, "skip min-max normalization");
    }

    TransformPlan to_plan(const ColumnSchema& schema) const {
        TransformPlan plan;
        if (!log_mode.empty()) plan.log_mode = log_mode_from_name(log_mode);
        if (!log_columns.empty()) plan.log_columns = resolve_features(log_columns, schema);
        if (!drop_columns.empty()) plan.drop_columns = resolve_features(drop_columns, schema);
        if (no_normalize) plan.normalize = false;
        return plan;
    }
};

struct TrainFlags {
    std::size_t epochs = TrainConfig{}.epochs;
    double learning_rate = TrainConfig{}.learning_rate;
    double dropout_p = TrainConfig{}.dropout_p;
    std::string dropout_layers = "both";
    std::size_t batch_size = TrainConfig{}.batch_size;

    void attach(CLI::App* cmd) {
        cmd->add_option("--epochs", epochs, "training epochs (default 150)");
        cmd->add_option("--learning-rate", learning_rate, "optimizer step size (default 0.001)");
        cmd->add_option("--dropout", dropout_p, "dropout probability (default 0.2)");
        cmd->add_option("--dropout-layers", dropout_layers, "dropout placement: both|first|second");
        cmd->add_option("--batch-size", batch_size, "mini-batch size (default 64)");
    }

    TrainConfig to_config() const {
        TrainConfig cfg;
        cfg.epochs = epochs;
        cfg.learning_rate = learning_rate;
        cfg.dropout_p = dropout_p;
        cfg.dropout_layers = dropout_placement_from_name(dropout_layers);
        cfg.batch_size = batch_size;
        return cfg;
    }
};

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

inline int run_validate(const std::string& input, const std::string& out_path,
                        const std::vector<std::string>& aliases, const std::string& log_columns,
                        std::ostream& os) {
    ColumnSchema schema = schema_with_aliases(aliases);
    Dataset d = load_dataset(input, schema);
    DatasetSummary summary = summarize(d);
    std::vector<std::string> audit_columns =
        log_columns.empty() ? TransformPlan{}.log_columns : resolve_features(log_columns, schema);
    AuditReport audit = audit_dataset(d, audit_columns);

    std::ostringstream report;
    report << "project: " << d.project() << "\n";
    report << "changes: " << summary.n_changes << "\n";
    report << "defect_ratio: "
           << (summary.pct_defect ? format_pct(*summary.pct_defect) : std::string("undefined")) << "\n";
    report << "columns (min / max / mean):\n";
    for (const auto& [name, stats] : summary.columns) {
        report << "  " << name << ": " << csv::format_number(stats.min) << " / "
               << csv::format_number(stats.max) << " / " << csv::format_number(stats.mean) << "\n";
    }
    report << "audit: " << audit.notes << "\n";
    if (!audit.raw_churn_rows.empty()) {
        report << "  raw churn rows (first 10):";
        for (std::size_t i = 0; i < audit.raw_churn_rows.size() && i < 10; ++i)
            report << " " << audit.raw_churn_rows[i];
        report << "\n";
    }
    for (const auto& [name, zeros] : audit.zero_value_counts) {
        if (zeros > 0) report << "  zeros in " << name << ": " << zeros << "\n";
    }

    os << report.str();
    if (!out_path.empty()) {
        std::ofstream f(out_path, std::ios::binary);
        if (!f) fail(errc::io, "cannot write '" + out_path + "'");
        f << report.str();
    }
    return audit.has_findings() ? kExitFindings : kExitOk;
}

inline int run_pca(const std::string& input, const std::string& features_arg, std::size_t components,
                   bool standardize, const std::string& out_prefix, std::ostream& os) {
    ColumnSchema schema = ColumnSchema::standard();
    Dataset d = load_dataset(input, schema);
    std::vector<std::string> features = resolve_features(features_arg, schema);
    PcaModel model = fit_pca(d, features, components, standardize);
    Projection proj = project(model, d);

    std::string scatter_path = out_prefix + ".scatter.csv";
    export_scatter(proj, scatter_path);
    std::string loadings = describe_loadings(model);
    std::string loadings_path = out_prefix + ".loadings.txt";
    std::ofstream f(loadings_path, std::ios::binary);
    if (!f) fail(errc::io, "cannot write '" + loadings_path + "'");
    f << loadings;

    os << "rows: " << d.n_rows() << "\n";
    for (std::size_t j = 0; j < model.explained_variance_ratio.size() && j < components; ++j) {
        os << "pc" << (j + 1) << " variance ratio: "
           << csv::format_number(model.explained_variance_ratio[j]) << "\n";
    }
    os << "scatter: " << scatter_path << "\n";
    os << "loadings: " << loadings_path << "\n";
    return kExitOk;
}

inline int run_train(const std::string& input, const std::string& features_arg, const PlanFlags& plan_flags,
                     const TrainFlags& train_flags, std::uint64_t seed, double threshold,
                     const std::string& out_path, std::ostream& os) {
    ColumnSchema schema = ColumnSchema::standard();
    Dataset d = load_dataset(input, schema);
    std::vector<std::string> requested = resolve_features(features_arg, schema);
    TransformPlan plan = plan_flags.to_plan(schema);
    TrainConfig cfg = train_flags.to_config();

    FittedPipeline pipeline = fit_pipeline(d, requested, plan, cfg, seed);
    pipeline.threshold = threshold;
    save_pipeline(pipeline, out_path);

    os << "trained on " << d.n_rows() << " rows (seed=" << seed << ")\n";
    os << "features: " << join_features(pipeline.features) << "\n";
    os << "model: " << out_path << "\n";
    return kExitOk;
}

inline int run_experiment_cmd(const std::string& spec_path, const std::string& out_prefix,
                              std::ostream& os) {
    ColumnSchema schema = ColumnSchema::standard();
    ExperimentSpec spec = load_experiment_spec(spec_path, schema);
    if (spec.dataset_paths.empty()) fail(errc::spec, "experiment spec names no datasets");

    std::vector<Dataset> sources;
    sources.reserve(spec.dataset_paths.size());
    for (const auto& path : spec.dataset_paths) sources.push_back(load_dataset(path, schema));
    Dataset data = sources.size() == 1 ? std::move(sources[0])
                                       : combine(sources, derive_seed(spec.seed, 9001));

    ExperimentReport report = run_experiment(spec, data);

    emit_report(report, ReportFormat::csv, out_prefix + ".csv");
    emit_report(report, ReportFormat::text, out_prefix + ".txt");
    {
        std::ofstream f(out_prefix + ".config.json", std::ios::binary);
        if (!f) fail(errc::io, "cannot write '" + out_prefix + ".config.json'");
        f << experiment_to_json(report.spec).dump(2) << "\n";
    }

    os << "seed: " << spec.seed << "\n";
    os << report_to_text(report);
    os << "report: " << out_prefix << ".csv, " << out_prefix << ".txt, " << out_prefix
       << ".config.json\n";
    return kExitOk;
}

inline int run_synth(std::size_t rows, double fraction, const std::string& signal, double separation,
                     std::uint64_t seed, const std::string& project, const std::string& out_path,
                     std::ostream& os) {
    SynthSpec spec;
    spec.n_rows = rows;
    spec.defect_fraction = fraction;
    if (!signal.empty()) spec.signal_features = resolve_features(signal, ColumnSchema::standard());
    spec.separation = separation;
    spec.seed = seed;
    spec.project = project;
    Dataset d = generate(spec);
    save_dataset(d, out_path);
    os << "wrote " << d.n_rows() << " rows to " << out_path << " (seed=" << seed << ")\n";
    return kExitOk;
}

inline int run_rank(const std::string& input, const std::string& model_path,
                    std::optional<double> threshold, const std::string& out_path, std::ostream& os) {
    FittedPipeline pipeline = load_pipeline(model_path);
    Dataset d = load_dataset(input);
    std::vector<double> scores = pipeline_score(pipeline, d);
    auto ranked = effort_rank(d, scores);

    std::ofstream f(out_path, std::ios::binary);
    if (!f) fail(errc::io, "cannot write '" + out_path + "'");
    f << "rank,row,probability,effort,score,raw_churn,label\n";
    double cutoff = threshold.value_or(pipeline.threshold);
    std::size_t predicted_positive = 0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        const auto& r = ranked[i];
        if (r.probability >= cutoff) ++predicted_positive;
        f << (i + 1) << "," << r.row << "," << csv::format_number(r.probability) << ","
          << csv::format_number(r.effort) << "," << csv::format_number(r.score) << ","
          << (r.raw_churn ? 1 : 0) << "," << d.label(r.row) << "\n";
    }
    if (!f) fail(errc::io, "write failed for '" + out_path + "'");
    os << "ranked " << ranked.size() << " rows (" << predicted_positive
       << " predicted defect-inducing at threshold " << csv::format_number(cutoff) << ")\n";
    os << "output: " << out_path << "\n";
    return kExitOk;
}

}  // namespace detail

// Entry point shared by the binary and the tests. Returns the process exit
// code instead of calling exit().
inline int run_cli(std::vector<std::string> args, std::ostream& os = std::cout,
                   std::ostream& err = std::cerr) {
    CLI::App app{"change-level defect prediction lab"};
    app.require_subcommand(1);

    // validate
    auto* validate = app.add_subcommand("validate", "load a dataset, print its summary and audit");
    std::string v_input, v_out, v_log_columns;
    std::vector<std::string> v_aliases;
    validate->add_option("--input,-i", v_input, "dataset CSV")->required();
    validate->add_option("--out,-o", v_out, "also write the report to this file");
    validate->add_option("--alias", v_aliases, "extra header alias, name=canonical (repeatable)");
    validate->add_option("--log-columns", v_log_columns, "columns audited for zeros");

    // pca
    auto* pca_cmd = app.add_subcommand("pca", "principal component scatter and loadings");
    std::string p_input, p_features = "all", p_out;
    std::size_t p_components = 2;
    bool p_standardize = false;
    pca_cmd->add_option("--input,-i", p_input, "dataset CSV")->required();
    pca_cmd->add_option("--features", p_features, "'all' or a comma list (aliases accepted)");
    pca_cmd->add_option("--components", p_components, "components to keep (default 2)");
    pca_cmd->add_flag("--standardize", p_standardize, "scale columns to unit variance before PCA");
    pca_cmd->add_option("--out,-o", p_out, "output prefix")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "fit the preprocessing and classifier on a dataset");
    std::string t_input, t_features = "all", t_out;
    std::uint64_t t_seed = detail::default_seed();
    double t_threshold = 0.5;
    detail::PlanFlags t_plan;
    detail::TrainFlags t_train;
    train_cmd->add_option("--input,-i", t_input, "training dataset CSV")->required();
    train_cmd->add_option("--features", t_features, "'all' or a comma list (aliases accepted)");
    train_cmd->add_option("--seed", t_seed, "base seed (default: JITDP_SEED or 0)");
    train_cmd->add_option("--threshold", t_threshold, "classification threshold (default 0.5)");
    train_cmd->add_option("--out,-o", t_out, "pipeline bundle path (JSON)")->required();
    t_plan.attach(train_cmd);
    t_train.attach(train_cmd);

    // experiment
    auto* exp_cmd = app.add_subcommand("experiment", "run a feature-combination grid from a spec file");
    std::string e_spec, e_out;
    exp_cmd->add_option("--spec,-s", e_spec, "experiment spec (JSON)")->required();
    exp_cmd->add_option("--out,-o", e_out, "output prefix")->required();

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
    std::size_t s_rows = 1000;
    double s_fraction = 0.5, s_separation = 0.0;
    std::string s_signal, s_project = "synthetic", s_out;
    std::uint64_t s_seed = detail::default_seed();
    synth_cmd->add_option("--rows", s_rows, "row count (default 1000)");
    synth_cmd->add_option("--defect-fraction", s_fraction, "defective share in (0,1) (default 0.5)");
    synth_cmd->add_option("--signal", s_signal, "comma list of class-separated features");
    synth_cmd->add_option("--separation", s_separation, "class separation in stddev units");
    synth_cmd->add_option("--seed", s_seed, "seed (default: JITDP_SEED or 0)");
    synth_cmd->add_option("--project", s_project, "project tag");
    synth_cmd->add_option("--out,-o", s_out, "output CSV")->required();

    // rank
    auto* rank_cmd = app.add_subcommand("rank", "effort-aware ranking of a dataset under a trained model");
    std::string r_input, r_model, r_out;
    double r_threshold = -1.0;
    rank_cmd->add_option("--input,-i", r_input, "dataset CSV")->required();
    rank_cmd->add_option("--model,-m", r_model, "pipeline bundle from 'train'")->required();
    rank_cmd->add_option("--threshold", r_threshold, "override the bundle's threshold");
    rank_cmd->add_option("--out,-o", r_out, "ranked CSV")->required();

    std::vector<const char*> argv;
    argv.push_back("jitdp");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {  // --help
            os << app.help();
            return kExitOk;
        }
        err << "error: " << e.what() << "\n";
        return kExitError;
    }

    try {
        if (validate->parsed()) return detail::run_validate(v_input, v_out, v_aliases, v_log_columns, os);
        if (pca_cmd->parsed())
            return detail::run_pca(p_input, p_features, p_components, p_standardize, p_out, os);
        if (train_cmd->parsed())
            return detail::run_train(t_input, t_features, t_plan, t_train, t_seed, t_threshold, t_out, os);
        if (exp_cmd->parsed()) return detail::run_experiment_cmd(e_spec, e_out, os);
        if (synth_cmd->parsed())
            return detail::run_synth(s_rows, s_fraction, s_signal, s_separation, s_seed, s_project, s_out,
                                     os);
        if (rank_cmd->parsed()) {
            std::optional<double> cutoff;
            if (r_threshold >= 0.0) cutoff = r_threshold;
            return detail::run_rank(r_input, r_model, cutoff, r_out, os);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}

}  // namespace jitdp::cli
