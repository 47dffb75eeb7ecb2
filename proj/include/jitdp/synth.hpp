#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "jitdp/dataset.hpp"
#include "jitdp/error.hpp"
#include "jitdp/rng.hpp"

namespace jitdp {

// Synthetic change-level dataset with a controllable class signal. Serves as
// the verification oracle where real results are stochastic: separation 0
// carries no signal at all, large separations approach separable.
struct SynthSpec {
    std::size_t n_rows = 1000;
    double defect_fraction = 0.5;
    std::vector<std::string> signal_features;  // class-conditional shift applies here
    double separation = 0.0;                   // gap between class means, in stddev units
    std::uint64_t seed = 0;
    std::string project = "synthetic";

    void validate() const {
        if (n_rows < 1) fail(errc::spec, "n_rows must be >= 1");
        if (!(defect_fraction > 0.0 && defect_fraction < 1.0))
            fail(errc::spec, "defect_fraction must lie strictly between 0 and 1, got " +
                                 std::to_string(defect_fraction));
        if (separation < 0.0) fail(errc::spec, "separation must be >= 0");
        for (const auto& f : signal_features) {
            const auto& names = ColumnSchema::canonical_metrics();
            if (std::find(names.begin(), names.end(), f) == names.end())
                fail(errc::spec, "signal feature '" + f + "' is not a canonical metric");
        }
    }
};

namespace detail {

struct SynthColumn {
    double mu;      // log-scale location
    double sigma;   // log-scale spread
    bool plus_one;  // emitted as 1 + exp(z) so strict log never trips on it
};

// Log-designated columns are generated as 1 + positive draws; the rest only
// need to be non-negative. Locations are loosely change-data-shaped, nothing
// more.
inline SynthColumn synth_column_params(const std::string& name) {
    if (name == "ns") return {0.2, 0.5, true};
    if (name == "nd") return {0.4, 0.5, true};
    if (name == "nf") return {0.6, 0.6, true};
    if (name == "entropy") return {-0.5, 0.6, false};
    if (name == "la") return {-1.5, 0.9, false};
    if (name == "ld") return {-2.0, 0.9, false};
    if (name == "lt") return {3.0, 0.8, false};
    if (name == "ndev") return {0.8, 0.6, true};
    if (name == "age") return {3.5, 0.8, false};
    if (name == "nuc") return {0.7, 0.6, true};
    if (name == "exp") return {3.0, 0.8, true};
    if (name == "rexp") return {2.0, 0.8, true};
    if (name == "sexp") return {2.5, 0.8, true};
    return {0.0, 1.0, false};
}

}  // namespace detail

// Deterministic per seed; the label fraction is exact up to rounding, signal
// features get their class-1 mean shifted by `separation` stddevs on the log
// scale, everything else is identically distributed across classes.
inline Dataset generate(const SynthSpec& spec) {
    spec.validate();
    const auto& names = ColumnSchema::canonical_metrics();
    const std::size_t n = spec.n_rows;
    std::size_t n_pos = static_cast<std::size_t>(
        std::llround(static_cast<double>(n) * spec.defect_fraction));
    n_pos = std::clamp<std::size_t>(n_pos, 1, n - 1);

    Rng rng(spec.seed);
    std::vector<std::vector<double>> cols(names.size());
    for (auto& c : cols) c.reserve(n);
    std::vector<int> labels(n, 0);
    std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_pos), 1);

    for (std::size_t r = 0; r < n; ++r) {
        bool defective = labels[r] == 1;
        for (std::size_t c = 0; c < names.size(); ++c) {
            const std::string& name = names[c];
            bool is_signal = std::find(spec.signal_features.begin(), spec.signal_features.end(), name) !=
                             spec.signal_features.end();
            if (name == "fix") {
                double p = 0.3;
                if (is_signal && defective)
                    p = std::min(0.95, 0.3 + 0.1 * spec.separation);
                cols[c].push_back(rng.bernoulli(p) ? 1.0 : 0.0);
                continue;
            }
            auto params = detail::synth_column_params(name);
            double mu = params.mu;
            if (is_signal && defective) mu += spec.separation * params.sigma;
            double v = std::exp(rng.normal(mu, params.sigma));
            cols[c].push_back(params.plus_one ? 1.0 + v : v);
        }
    }

    Dataset d(std::vector<std::string>(names.begin(), names.end()), std::move(cols), std::move(labels),
              spec.project);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    return d.with_rows(order);
}

}  // namespace jitdp
