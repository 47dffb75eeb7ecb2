#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "jitdp/csv.hpp"
#include "jitdp/error.hpp"
#include "jitdp/matrix.hpp"

namespace jitdp {

// ---------------------------------------------------------------------------
// Schema
// ---------------------------------------------------------------------------

// One change-level record. Counts are doubles because the distributed files
// store several of them pre-normalized (la/lt, lt/nf, nuc/nf).
struct ChangeRecord {
    double ns = 0;       // modified subsystems
    double nd = 0;       // modified directories
    double nf = 0;       // modified files
    double entropy = 0;  // spread of the change across files, bits
    double la = 0;       // lines added (divided by lt except lt=0 rows)
    double ld = 0;       // lines deleted (same caveat)
    double lt = 0;       // lines before the change (divided by nf)
    bool fix = false;    // change is a bug fix
    double ndev = 0;     // developers that touched the files
    double age = 0;      // mean days since the previous change
    double nuc = 0;      // unique changes to the files (divided by nf)
    double exp = 0;      // developer change count
    double rexp = 0;     // recency-weighted developer experience
    double sexp = 0;     // developer changes in the subsystem
    bool label = false;  // defect-inducing
};

// Canonical column names, alias handling, and the required-column contract
// for ingestion. Header matching is case-insensitive before aliasing.
class ColumnSchema {
public:
    static const std::vector<std::string>& canonical_metrics() {
        static const std::vector<std::string> names = {
            "ns", "nd", "nf", "entropy", "la", "ld", "lt",
            "fix", "ndev", "age", "nuc", "exp", "rexp", "sexp"};
        return names;
    }

    static constexpr const char* label_column = "label";

    // Aliases observed in the distributed files: nm/pd/npt are the file-level
    // names for nd/age/nuc, "entrophy" is a header misspelling, "bug" the label.
    static ColumnSchema standard() {
        ColumnSchema s;
        s.add_alias("nm", "nd");
        s.add_alias("pd", "age");
        s.add_alias("npt", "nuc");
        s.add_alias("entrophy", "entropy");
        s.add_alias("bug", "label");
        return s;
    }

    static bool is_canonical(const std::string& name) {
        if (name == label_column) return true;
        const auto& m = canonical_metrics();
        return std::find(m.begin(), m.end(), name) != m.end();
    }

    void add_alias(const std::string& alias, const std::string& canonical) {
        std::string a = normalize(alias);
        std::string c = normalize(canonical);
        if (!is_canonical(c)) fail(errc::spec, "alias target '" + c + "' is not a canonical column");
        if (is_canonical(a)) fail(errc::spec, "alias '" + a + "' shadows a canonical column");
        aliases_[a] = c;
    }

    // Canonical name for a header cell, or empty when the cell is not a
    // recognized metric/label column.
    std::string resolve(std::string_view header_cell) const {
        std::string h = normalize(header_cell);
        if (auto it = aliases_.find(h); it != aliases_.end()) return it->second;
        if (is_canonical(h)) return h;
        return {};
    }

    // "canonical" or "canonical/alias" for error messages.
    std::string describe(const std::string& canonical) const {
        std::string out = canonical;
        for (const auto& [a, c] : aliases_) {
            if (c == canonical) out += "/" + a;
        }
        return out;
    }

    const std::map<std::string, std::string>& aliases() const { return aliases_; }

    static std::string normalize(std::string_view s) {
        std::size_t b = 0, e = s.size();
        while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
        std::string out(s.substr(b, e - b));
        std::transform(out.begin(), out.end(), out.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        return out;
    }

private:
    std::map<std::string, std::string> aliases_;
};

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

// Non-metric input column carried through untouched (commit ids, dates, ...).
struct MetaColumn {
    std::string name;
    std::vector<std::string> values;
};

struct ColumnStats {
    double min = std::numeric_limits<double>::quiet_NaN();
    double max = std::numeric_limits<double>::quiet_NaN();
    double mean = std::numeric_limits<double>::quiet_NaN();
};

// Ordered, immutable collection of change records, column-major. Every
// "mutation" constructs a new Dataset; copies share the lazily computed
// column-stats cache, which is safe because the records never change.
class Dataset {
public:
    Dataset() : stats_box_(std::make_shared<StatsBox>()) {}

    Dataset(std::vector<std::string> feature_names,
            std::vector<std::vector<double>> columns,
            std::vector<int> labels,
            std::string project = {},
            std::vector<MetaColumn> meta = {},
            std::vector<std::string> row_projects = {})
        : feature_names_(std::move(feature_names)),
          columns_(std::move(columns)),
          labels_(std::move(labels)),
          project_(std::move(project)),
          meta_(std::move(meta)),
          row_projects_(std::move(row_projects)),
          stats_box_(std::make_shared<StatsBox>()) {
        if (columns_.size() != feature_names_.size())
            fail(errc::dim, "column count does not match feature name count");
        for (const auto& col : columns_) {
            if (col.size() != labels_.size()) fail(errc::dim, "ragged column lengths");
        }
        for (const auto& m : meta_) {
            if (m.values.size() != labels_.size()) fail(errc::dim, "ragged meta column");
        }
        if (!row_projects_.empty() && row_projects_.size() != labels_.size())
            fail(errc::dim, "row project tags do not match row count");
    }

    static Dataset from_records(const std::vector<ChangeRecord>& records, std::string project = {}) {
        const auto& names = ColumnSchema::canonical_metrics();
        std::vector<std::vector<double>> cols(names.size());
        std::vector<int> labels;
        for (auto& c : cols) c.reserve(records.size());
        labels.reserve(records.size());
        for (const auto& r : records) {
            const double vals[] = {r.ns, r.nd, r.nf, r.entropy, r.la, r.ld, r.lt,
                                   r.fix ? 1.0 : 0.0, r.ndev, r.age, r.nuc, r.exp, r.rexp, r.sexp};
            for (std::size_t i = 0; i < names.size(); ++i) cols[i].push_back(vals[i]);
            labels.push_back(r.label ? 1 : 0);
        }
        return Dataset(std::vector<std::string>(names.begin(), names.end()), std::move(cols),
                       std::move(labels), std::move(project));
    }

    std::size_t n_rows() const { return labels_.size(); }
    std::size_t n_features() const { return feature_names_.size(); }
    const std::vector<std::string>& feature_names() const { return feature_names_; }
    const std::string& project() const { return project_; }
    const std::vector<MetaColumn>& meta_columns() const { return meta_; }

    bool has_feature(const std::string& name) const {
        return std::find(feature_names_.begin(), feature_names_.end(), name) != feature_names_.end();
    }

    std::size_t feature_index(const std::string& name) const {
        auto it = std::find(feature_names_.begin(), feature_names_.end(), name);
        if (it == feature_names_.end()) fail(errc::unknown_feature, "'" + name + "'");
        return static_cast<std::size_t>(it - feature_names_.begin());
    }

    const std::vector<double>& column(std::size_t i) const { return columns_[i]; }
    const std::vector<double>& column(const std::string& name) const { return columns_[feature_index(name)]; }
    std::span<const int> labels() const { return labels_; }
    int label(std::size_t row) const { return labels_[row]; }

    const std::string& row_project(std::size_t row) const {
        return row_projects_.empty() ? project_ : row_projects_[row];
    }
    bool has_row_projects() const { return !row_projects_.empty(); }

    std::size_t count_label(int value) const {
        std::size_t n = 0;
        for (int l : labels_) n += (l == value);
        return n;
    }

    // New dataset holding rows [indices] in the given order.
    Dataset with_rows(std::span<const std::size_t> indices) const {
        std::vector<std::vector<double>> cols(columns_.size());
        for (std::size_t c = 0; c < columns_.size(); ++c) {
            cols[c].reserve(indices.size());
            for (std::size_t i : indices) cols[c].push_back(columns_[c][i]);
        }
        std::vector<int> labels;
        labels.reserve(indices.size());
        for (std::size_t i : indices) labels.push_back(labels_[i]);
        std::vector<MetaColumn> meta(meta_.size());
        for (std::size_t m = 0; m < meta_.size(); ++m) {
            meta[m].name = meta_[m].name;
            meta[m].values.reserve(indices.size());
            for (std::size_t i : indices) meta[m].values.push_back(meta_[m].values[i]);
        }
        std::vector<std::string> rp;
        if (!row_projects_.empty()) {
            rp.reserve(indices.size());
            for (std::size_t i : indices) rp.push_back(row_projects_[i]);
        }
        return Dataset(feature_names_, std::move(cols), std::move(labels), project_, std::move(meta),
                       std::move(rp));
    }

    Dataset with_column_replaced(std::size_t index, std::vector<double> values) const {
        if (values.size() != n_rows()) fail(errc::dim, "replacement column has wrong length");
        auto cols = columns_;
        cols[index] = std::move(values);
        return Dataset(feature_names_, std::move(cols), labels_, project_, meta_, row_projects_);
    }

    // Row-major block of the requested features, in request order.
    Matrix feature_matrix(const std::vector<std::string>& features) const {
        Matrix m(n_rows(), features.size());
        for (std::size_t c = 0; c < features.size(); ++c) {
            const auto& col = column(features[c]);
            for (std::size_t r = 0; r < col.size(); ++r) m.at(r, c) = col[r];
        }
        return m;
    }

    // Full record view; only meaningful for datasets carrying all 14 metrics.
    ChangeRecord record(std::size_t row) const {
        ChangeRecord r;
        r.ns = column("ns")[row];
        r.nd = column("nd")[row];
        r.nf = column("nf")[row];
        r.entropy = column("entropy")[row];
        r.la = column("la")[row];
        r.ld = column("ld")[row];
        r.lt = column("lt")[row];
        r.fix = column("fix")[row] != 0.0;
        r.ndev = column("ndev")[row];
        r.age = column("age")[row];
        r.nuc = column("nuc")[row];
        r.exp = column("exp")[row];
        r.rexp = column("rexp")[row];
        r.sexp = column("sexp")[row];
        r.label = labels_[row] != 0;
        return r;
    }

    // Per-feature min/max/mean, computed once on first use and shared by
    // copies (records are immutable, so the cache never goes stale).
    const std::vector<ColumnStats>& column_stats() const {
        auto box = stats_box_;
        std::lock_guard<std::mutex> lock(box->mutex);
        if (!box->ready) {
            box->stats.resize(columns_.size());
            for (std::size_t c = 0; c < columns_.size(); ++c) {
                const auto& col = columns_[c];
                if (col.empty()) continue;
                double mn = col[0], mx = col[0], sum = 0.0;
                for (double v : col) {
                    mn = std::min(mn, v);
                    mx = std::max(mx, v);
                    sum += v;
                }
                box->stats[c] = {mn, mx, sum / static_cast<double>(col.size())};
            }
            box->ready = true;
        }
        return box->stats;
    }

private:
    struct StatsBox {
        std::mutex mutex;
        bool ready = false;
        std::vector<ColumnStats> stats;
    };

    std::vector<std::string> feature_names_;
    std::vector<std::vector<double>> columns_;
    std::vector<int> labels_;
    std::string project_;
    std::vector<MetaColumn> meta_;
    std::vector<std::string> row_projects_;  // empty = uniform project_
    mutable std::shared_ptr<StatsBox> stats_box_;
};

// ---------------------------------------------------------------------------
// Summaries and audits
// ---------------------------------------------------------------------------

struct DatasetSummary {
    std::size_t n_changes = 0;
    // Unset on empty datasets rather than 0, so an ingestion failure cannot
    // masquerade as "no defects".
    std::optional<double> pct_defect;
    std::vector<std::pair<std::string, ColumnStats>> columns;
};

inline DatasetSummary summarize(const Dataset& d) {
    DatasetSummary s;
    s.n_changes = d.n_rows();
    if (d.n_rows() > 0) {
        s.pct_defect = static_cast<double>(d.count_label(1)) / static_cast<double>(d.n_rows());
    }
    const auto& stats = d.column_stats();
    for (std::size_t c = 0; c < d.n_features(); ++c) {
        s.columns.emplace_back(d.feature_names()[c], stats[c]);
    }
    return s;
}

inline Dataset select_features(const Dataset& d, const std::vector<std::string>& features) {
    std::vector<std::vector<double>> cols;
    cols.reserve(features.size());
    for (const auto& f : features) cols.push_back(d.column(f));  // throws E_UNKNOWN_FEATURE
    std::vector<std::string> rp;
    if (d.has_row_projects()) {
        rp.reserve(d.n_rows());
        for (std::size_t i = 0; i < d.n_rows(); ++i) rp.push_back(d.row_project(i));
    }
    return Dataset(features, std::move(cols), std::vector<int>(d.labels().begin(), d.labels().end()),
                   d.project(), {}, std::move(rp));
}

struct AuditReport {
    // Rows where lt = 0 but la or ld is positive: churn stored raw, not
    // divided by lt.
    std::vector<std::size_t> raw_churn_rows;
    // Zeros sitting in columns destined for a logarithm.
    std::vector<std::pair<std::string, std::size_t>> zero_value_counts;
    std::string notes;

    bool has_findings() const {
        if (!raw_churn_rows.empty()) return true;
        for (const auto& [_, n] : zero_value_counts) {
            if (n > 0) return true;
        }
        return false;
    }
};

inline AuditReport audit_dataset(const Dataset& d, const std::vector<std::string>& log_columns) {
    AuditReport report;
    if (d.has_feature("lt") && d.has_feature("la") && d.has_feature("ld")) {
        const auto& lt = d.column("lt");
        const auto& la = d.column("la");
        const auto& ld = d.column("ld");
        for (std::size_t i = 0; i < d.n_rows(); ++i) {
            if (lt[i] == 0.0 && (la[i] > 0.0 || ld[i] > 0.0)) report.raw_churn_rows.push_back(i);
        }
    }
    std::size_t total_zero_cells = 0;
    for (const auto& name : log_columns) {
        const auto& col = d.column(name);  // throws E_UNKNOWN_FEATURE
        std::size_t zeros = 0;
        for (double v : col) zeros += (v == 0.0);
        total_zero_cells += zeros;
        report.zero_value_counts.emplace_back(name, zeros);
    }
    std::ostringstream notes;
    notes << report.raw_churn_rows.size() << " row(s) store raw la/ld (lt=0 with churn); "
          << total_zero_cells << " zero cell(s) across " << log_columns.size()
          << " log-designated column(s)";
    report.notes = notes.str();
    return report;
}

// ---------------------------------------------------------------------------
// CSV ingestion / emission
// ---------------------------------------------------------------------------

namespace detail {

inline bool parse_binary_cell(const std::string& cell, bool& out) {
    std::string v = ColumnSchema::normalize(cell);
    if (v == "true") {
        out = true;
        return true;
    }
    if (v == "false") {
        out = false;
        return true;
    }
    double num = 0.0;
    if (!csv::parse_number(v, num)) return false;
    if (num == 0.0) {
        out = false;
        return true;
    }
    if (num == 1.0) {
        out = true;
        return true;
    }
    return false;
}

inline std::string cell_ref(std::size_t line_no, const std::string& column) {
    return "line " + std::to_string(line_no) + ", column '" + column + "'";
}

}  // namespace detail

inline Dataset load_dataset(const std::string& path, const ColumnSchema& schema = ColumnSchema::standard(),
                            std::string project = {}) {
    std::ifstream in(path);
    if (!in) fail(errc::io, "cannot open '" + path + "'");
    std::string header_line;
    if (!std::getline(in, header_line)) fail(errc::schema, "'" + path + "' is empty, header row required");
    if (!header_line.empty() && header_line.back() == '\r') header_line.pop_back();
    // UTF-8 BOM tolerated on the first cell.
    if (header_line.rfind("\xEF\xBB\xBF", 0) == 0) header_line.erase(0, 3);

    auto header = csv::split_line(header_line);
    const auto& metric_names = ColumnSchema::canonical_metrics();

    // Map every header cell to a canonical column or a meta column.
    std::map<std::string, std::size_t> canonical_pos;  // canonical name -> cell index
    std::vector<std::pair<std::string, std::size_t>> meta_pos;
    for (std::size_t i = 0; i < header.size(); ++i) {
        std::string canonical = schema.resolve(header[i]);
        if (canonical.empty()) {
            meta_pos.emplace_back(header[i], i);
            continue;
        }
        if (canonical_pos.count(canonical))
            fail(errc::schema, "duplicate column '" + canonical + "' in '" + path + "'");
        canonical_pos[canonical] = i;
    }
    for (const auto& name : metric_names) {
        if (!canonical_pos.count(name))
            fail(errc::schema, "missing required column '" + schema.describe(name) + "' in '" + path + "'");
    }
    if (!canonical_pos.count(ColumnSchema::label_column))
        fail(errc::schema, "missing required column '" + schema.describe(ColumnSchema::label_column) +
                               "' in '" + path + "'");

    std::vector<std::vector<double>> columns(metric_names.size());
    std::vector<int> labels;
    std::vector<MetaColumn> meta(meta_pos.size());
    for (std::size_t m = 0; m < meta_pos.size(); ++m) meta[m].name = meta_pos[m].first;

    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = csv::split_line(line);
        if (cells.size() != header.size())
            fail(errc::parse, "line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                                  " field(s), header has " + std::to_string(header.size()));

        for (std::size_t c = 0; c < metric_names.size(); ++c) {
            const std::string& name = metric_names[c];
            const std::string& cell = cells[canonical_pos[name]];
            if (name == "fix") {
                bool v = false;
                if (!detail::parse_binary_cell(cell, v))
                    fail(errc::parse, detail::cell_ref(line_no, name) + ": '" + cell + "' is not binary");
                columns[c].push_back(v ? 1.0 : 0.0);
                continue;
            }
            double v = 0.0;
            if (!csv::parse_number(cell, v) || !std::isfinite(v))
                fail(errc::parse, detail::cell_ref(line_no, name) + ": '" + cell + "' is not a finite number");
            // Field invariants the downstream math relies on.
            if ((name == "ns" || name == "nd" || name == "nf" || name == "ndev" || name == "entropy" ||
                 name == "age") &&
                v < 0.0)
                fail(errc::parse, detail::cell_ref(line_no, name) + ": negative value " + cell);
            columns[c].push_back(v);
        }
        {
            const std::string& cell = cells[canonical_pos[ColumnSchema::label_column]];
            bool v = false;
            if (!detail::parse_binary_cell(cell, v))
                fail(errc::label,
                     detail::cell_ref(line_no, "label") + ": '" + cell + "' is not interpretable as binary");
            labels.push_back(v ? 1 : 0);
        }
        for (std::size_t m = 0; m < meta_pos.size(); ++m) meta[m].values.push_back(cells[meta_pos[m].second]);
    }

    if (project.empty()) {
        // Default provenance tag: file stem.
        std::size_t slash = path.find_last_of("/\\");
        std::string stem = (slash == std::string::npos) ? path : path.substr(slash + 1);
        std::size_t dot = stem.find_last_of('.');
        if (dot != std::string::npos && dot > 0) stem = stem.substr(0, dot);
        project = stem;
    }
    return Dataset(std::vector<std::string>(metric_names.begin(), metric_names.end()), std::move(columns),
                   std::move(labels), std::move(project), std::move(meta));
}

// Canonical emission: meta columns first (as ingested), then the metric
// columns present in canonical order, then label, then a per-row project
// column when the dataset mixes sources.
inline void save_dataset(const Dataset& d, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(errc::io, "cannot write '" + path + "'");

    std::vector<std::string> ordered;
    for (const auto& name : ColumnSchema::canonical_metrics()) {
        if (d.has_feature(name)) ordered.push_back(name);
    }
    for (const auto& name : d.feature_names()) {
        if (!ColumnSchema::is_canonical(name)) ordered.push_back(name);
    }

    std::vector<std::string> header;
    for (const auto& m : d.meta_columns()) header.push_back(m.name);
    for (const auto& name : ordered) header.push_back(name);
    header.push_back(ColumnSchema::label_column);
    if (d.has_row_projects()) header.push_back("project");
    out << csv::join_fields(header) << "\n";

    std::vector<const std::vector<double>*> cols;
    cols.reserve(ordered.size());
    for (const auto& name : ordered) cols.push_back(&d.column(name));

    std::vector<std::string> row;
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        row.clear();
        for (const auto& m : d.meta_columns()) row.push_back(m.values[i]);
        for (const auto* col : cols) row.push_back(csv::format_number((*col)[i]));
        row.push_back(d.label(i) ? "1" : "0");
        if (d.has_row_projects()) row.push_back(d.row_project(i));
        out << csv::join_fields(row) << "\n";
    }
    if (!out) fail(errc::io, "write failed for '" + path + "'");
}

}  // namespace jitdp
