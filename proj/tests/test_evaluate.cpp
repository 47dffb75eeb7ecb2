#include <catch2/catch.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "jitdp/evaluate.hpp"
#include "jitdp/serialize.hpp"
#include "jitdp/synth.hpp"
#include "temp_files.hpp"

using namespace jitdp;

namespace {

std::string testutil_unused_path() { return testutil::temp_path("hollow_report.csv"); }

Dataset signal_dataset(std::size_t n, double separation, std::uint64_t seed) {
    SynthSpec spec;
    spec.n_rows = n;
    spec.defect_fraction = 0.5;
    spec.signal_features = {"lt", "age"};
    spec.separation = separation;
    spec.seed = seed;
    return generate(spec);
}

TrainConfig quick_train() {
    TrainConfig cfg;
    cfg.epochs = 40;
    return cfg;
}

}  // namespace

TEST_CASE("folds partition the rows with sizes differing by at most one", "[evaluate]") {
    std::vector<int> labels(100, 0);
    for (std::size_t i = 0; i < 37; ++i) labels[i] = 1;
    FoldPlan plan = make_folds(labels, 10, 5);
    std::set<std::size_t> seen;
    for (const auto& fold : plan.folds) {
        CHECK(fold.size() == 10);
        seen.insert(fold.begin(), fold.end());
    }
    CHECK(seen.size() == 100);

    std::vector<int> odd(23, 0);
    odd[0] = odd[5] = odd[11] = 1;
    FoldPlan plan23 = make_folds(odd, 5, 1);
    std::size_t total = 0, mx = 0, mn = odd.size();
    for (const auto& fold : plan23.folds) {
        total += fold.size();
        mx = std::max(mx, fold.size());
        mn = std::min(mn, fold.size());
    }
    CHECK(total == 23);
    CHECK(mx - mn <= 1);

    CHECK_THROWS_MATCHES(make_folds(std::vector<int>(4, 0), 10, 1), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == errc::too_small;
                         }));
}

TEST_CASE("stratified folds keep per-class counts within one of each other", "[evaluate]") {
    std::vector<int> labels(103, 0);
    for (std::size_t i = 0; i < 31; ++i) labels[i] = 1;
    FoldPlan plan = make_folds(labels, 10, 9, /*stratified=*/true);
    std::size_t mx = 0, mn = labels.size(), pos_mx = 0, pos_mn = labels.size();
    for (const auto& fold : plan.folds) {
        std::size_t pos = 0;
        for (std::size_t i : fold) pos += labels[i] == 1;
        mx = std::max(mx, fold.size());
        mn = std::min(mn, fold.size());
        pos_mx = std::max(pos_mx, pos);
        pos_mn = std::min(pos_mn, pos);
    }
    CHECK(mx - mn <= 1);
    CHECK(pos_mx - pos_mn <= 1);
}

TEST_CASE("kfold_cv is deterministic and near-perfect on separable data", "[evaluate]") {
    Dataset d = signal_dataset(400, 4.0, 21);
    TransformPlan plan;
    TrainConfig full;  // default epoch budget; the quick config underfits this check
    CvResult r1 = kfold_cv(d, {"lt", "age"}, plan, full, 10, 33);
    CvResult r2 = kfold_cv(d, {"lt", "age"}, plan, full, 10, 33);
    REQUIRE(r1.folds.size() == 10);
    for (std::size_t f = 0; f < 10; ++f) {
        CHECK(r1.folds[f].recall == r2.folds[f].recall);
        CHECK(r1.folds[f].precision == r2.folds[f].precision);
        CHECK(r1.folds[f].counts.tp == r2.folds[f].counts.tp);
    }
    CHECK(r1.mean_recall >= 0.95);

    // mean is the exact arithmetic mean of the per-fold values
    double sum = 0.0;
    for (const auto& f : r1.folds) sum += f.recall;
    CHECK(r1.mean_recall == sum / 10.0);
}

TEST_CASE("kfold_cv guards degenerate inputs", "[evaluate]") {
    Dataset tiny = signal_dataset(8, 1.0, 3);
    CHECK_THROWS_MATCHES(kfold_cv(tiny, {"lt"}, TransformPlan{}, quick_train(), 10, 1), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == errc::too_small;
                         }));

    std::vector<ChangeRecord> records(30);
    for (auto& r : records) {
        r.ns = r.nf = r.ndev = r.nuc = r.exp = r.rexp = r.sexp = 1;
        r.lt = 10;
        r.label = true;
    }
    Dataset one_class = Dataset::from_records(records);
    CHECK_THROWS_MATCHES(kfold_cv(one_class, {"lt"}, TransformPlan{}, quick_train(), 10, 1), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == errc::one_class;
                         }));
}

TEST_CASE("validation folds are never resampled and never leak into fitting", "[evaluate]") {
    // The pipeline contract: fold train portions balance exactly, held-out
    // rows reach scoring untouched. Checked through the public pieces.
    Dataset d = signal_dataset(150, 1.0, 8);
    FoldPlan plan = make_folds(d.labels(), 5, 2);
    for (std::size_t f = 0; f < 5; ++f) {
        std::vector<std::size_t> train_idx;
        std::vector<char> held(d.n_rows(), 0);
        for (std::size_t i : plan.folds[f]) held[i] = 1;
        for (std::size_t i = 0; i < d.n_rows(); ++i) {
            if (!held[i]) train_idx.push_back(i);
        }
        Dataset fold_train = undersample(d.with_rows(train_idx), 7);
        CHECK(fold_train.count_label(0) == fold_train.count_label(1));

        Dataset fold_val = d.with_rows(plan.folds[f]);
        CHECK(fold_val.n_rows() == plan.folds[f].size());  // every held-out row, unresampled
        for (std::size_t i = 0; i < fold_val.n_rows(); ++i) {
            CHECK(fold_val.column("lt")[i] == d.column("lt")[plan.folds[f][i]]);
        }
    }
}

TEST_CASE("run_experiment ranks the signal-bearing combination first", "[evaluate]") {
    Dataset d = signal_dataset(400, 4.0, 77);
    ExperimentSpec spec;
    spec.combinations = {{"exp", "sexp"}, {"lt", "age"}};
    spec.train = quick_train();
    spec.folds_k = 5;
    spec.seed = 3;
    spec.holdout.enabled = false;

    ExperimentReport report = run_experiment(spec, d);
    REQUIRE(report.results.size() == 2);
    CHECK(join_features(report.results[0].features) == "lt,age");
    CHECK(report.results[0].mean_recall > report.results[1].mean_recall);
    CHECK(report.n_cv == 400);
    CHECK(report.n_holdout == 0);

    // single combination gives a one-row report
    spec.combinations = {{"lt", "age"}};
    ExperimentReport single = run_experiment(spec, d);
    CHECK(single.results.size() == 1);

    spec.combinations = {};
    CHECK_THROWS_MATCHES(run_experiment(spec, d), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == errc::spec;
                         }));
}

TEST_CASE("holdout split reserves rows before cross-validation", "[evaluate]") {
    Dataset d = signal_dataset(200, 2.0, 5);
    ExperimentSpec spec;
    spec.combinations = {{"lt", "age"}};
    spec.train = quick_train();
    spec.folds_k = 5;
    spec.holdout.enabled = true;
    spec.holdout.train_fraction = 0.9;
    ExperimentReport report = run_experiment(spec, d);
    CHECK(report.n_total == 200);
    CHECK(report.n_cv == 180);
    CHECK(report.n_holdout == 20);
}

TEST_CASE("effort rank divides probability by stored churn", "[evaluate]") {
    std::vector<ChangeRecord> records(4);
    records[0].la = 3;
    records[0].ld = 1;
    records[0].lt = 10;  // effort 4
    records[1].la = 0;
    records[1].ld = 0;
    records[1].lt = 5;  // zero effort -> epsilon floor
    records[2].la = 10;
    records[2].ld = 0;
    records[2].lt = 0;  // raw churn row
    records[3].la = 3;
    records[3].ld = 1;
    records[3].lt = 9;  // same score as row 0 -> stable order
    Dataset d = Dataset::from_records(records);

    std::vector<double> probs{0.8, 0.5, 0.4, 0.8};
    auto ranked = effort_rank(d, probs);
    REQUIRE(ranked.size() == 4);
    // zero-effort positive prediction ranks first (cheapest inspection)
    CHECK(ranked[0].row == 1);
    CHECK(ranked[0].score == Approx(0.5 / 1e-6));
    // rows 0 and 3 tie at 0.2; original order preserved
    CHECK(ranked[1].row == 0);
    CHECK(ranked[1].score == Approx(0.2));
    CHECK(ranked[2].row == 3);
    CHECK(ranked[3].row == 2);
    CHECK(ranked[3].raw_churn);
    CHECK_FALSE(ranked[1].raw_churn);

    // permutation of the input rows
    std::set<std::size_t> rows;
    for (const auto& r : ranked) rows.insert(r.row);
    CHECK(rows.size() == 4);

    // zero probability scores zero and lands behind any nonzero score
    std::vector<double> with_zero{0.0, 0.2, 0.3, 0.1};
    auto ranked2 = effort_rank(d, with_zero);
    CHECK(ranked2.back().row == 0);
    CHECK(ranked2.back().score == 0.0);
}

TEST_CASE("report emission has one detail row per fold plus summaries", "[evaluate]") {
    Dataset d = signal_dataset(120, 3.0, 13);
    ExperimentSpec spec;
    spec.combinations = {{"lt", "age"}, {"exp"}};
    spec.train = quick_train();
    spec.folds_k = 5;
    spec.holdout.enabled = false;
    ExperimentReport report = run_experiment(spec, d);

    std::string csv = report_to_csv(report);
    std::size_t detail = 0, summary = 0;
    std::istringstream lines(csv);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("features,", 0) == 0) continue;
        if (line.find(",mean,") != std::string::npos) ++summary;
        else ++detail;
    }
    CHECK(detail == 10);  // 2 combinations x 5 folds
    CHECK(summary == 2);

    std::string text = report_to_text(report);
    CHECK(text.find("mean_recall") != std::string::npos);

    // descending order by mean recall
    REQUIRE(report.results.size() == 2);
    CHECK(report.results[0].mean_recall >= report.results[1].mean_recall);

    CHECK_THROWS_MATCHES(emit_report(report, ReportFormat::csv, "/nonexistent/dir/report.csv"), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == errc::io;
                         }));
    ExperimentReport hollow;
    CHECK_THROWS_MATCHES(emit_report(hollow, ReportFormat::csv, testutil_unused_path()), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == errc::spec;
                         }));
}

TEST_CASE("a report regenerated from its own config echo is byte-identical", "[evaluate]") {
    Dataset d = signal_dataset(100, 2.0, 99);
    ExperimentSpec spec;
    spec.name = "regen";
    spec.combinations = {{"lt", "age"}, {"sexp"}};
    spec.train = quick_train();
    spec.folds_k = 4;
    spec.repetitions = 2;
    spec.seed = 1234;
    spec.holdout.enabled = false;

    ExperimentReport first = run_experiment(spec, d);
    std::string csv1 = report_to_csv(first);
    std::string echo = experiment_to_json(first.spec).dump();

    ExperimentSpec reparsed = experiment_from_json(ojson::parse(echo));
    ExperimentReport second = run_experiment(reparsed, d);
    CHECK(report_to_csv(second) == csv1);
    CHECK(report_to_text(second) == report_to_text(first));
    CHECK(experiment_to_json(second.spec).dump() == echo);
}

TEST_CASE("repetition means are recoverable from the fold records", "[evaluate]") {
    Dataset d = signal_dataset(80, 3.0, 4);
    ExperimentSpec spec;
    spec.combinations = {{"lt", "age"}};
    spec.train = quick_train();
    spec.folds_k = 4;
    spec.repetitions = 3;
    spec.holdout.enabled = false;
    ExperimentReport report = run_experiment(spec, d);
    const auto& combo = report.results[0];
    CHECK(combo.folds.size() == 12);
    double sum = 0.0;
    for (std::size_t rep = 0; rep < 3; ++rep) sum += combo.repetition_mean_recall(rep);
    CHECK(combo.mean_recall == Approx(sum / 3.0).margin(1e-12));
}
