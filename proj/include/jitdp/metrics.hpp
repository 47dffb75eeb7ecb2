#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "jitdp/error.hpp"

namespace jitdp {

// Spread of one change across the files it touches: p_k is the proportion of
// the change landing in file k. Proportions must be non-negative and sum to 1
// (1e-9 tolerance absorbs float ingestion noise).
struct FileChangeProfile {
    std::vector<double> proportions;

    std::size_t n_files() const { return proportions.size(); }
};

constexpr double kProportionSumTolerance = 1e-9;

// Shannon entropy over the modification proportions, in bits, with the
// 0*log2(0) = 0 convention. Result lies in [0, log2(n)].
inline double entropy(const FileChangeProfile& profile) {
    if (profile.proportions.empty()) fail(errc::prob, "profile has no proportions");
    double sum = 0.0;
    for (double p : profile.proportions) {
        if (!std::isfinite(p) || p < 0.0)
            fail(errc::prob, "proportion " + std::to_string(p) + " is negative or non-finite");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kProportionSumTolerance)
        fail(errc::prob, "proportions sum to " + std::to_string(sum) + ", expected 1");
    double h = 0.0;
    for (double p : profile.proportions) {
        if (p > 0.0) h -= p * std::log2(p);
    }
    // Rounding can push the sum a hair outside the theoretical range.
    double hmax = std::log2(static_cast<double>(profile.proportions.size()));
    if (h < 0.0) h = 0.0;
    if (h > hmax) h = hmax;
    return h;
}

// Mean number of days since the previous change, over the modified files.
inline double average_age(std::span<const double> intervals) {
    if (intervals.empty()) fail(errc::empty, "no intervals to average");
    double sum = 0.0;
    for (double d : intervals) sum += d;
    return sum / static_cast<double>(intervals.size());
}

inline double average_age(const std::vector<double>& intervals) {
    return average_age(std::span<const double>(intervals));
}

// Churn normalization as stored in the distributed datasets: LA and LD are
// divided by LT, LT and NUC by NF. When LT is 0 (rows introducing only new
// files) LA/LD pass through raw and the result is marked so downstream
// consumers can surface the anomaly.
struct ChurnNormalization {
    double la = 0.0;
    double ld = 0.0;
    double lt = 0.0;
    double nuc = 0.0;
    bool raw_churn = false;  // la/ld kept raw because lt was 0
};

inline ChurnNormalization normalize_churn(double la, double ld, double lt, double nf, double nuc) {
    if (nf < 1.0) fail(errc::nf, "nf must be >= 1, got " + std::to_string(nf));
    ChurnNormalization out;
    if (lt > 0.0) {
        out.la = la / lt;
        out.ld = ld / lt;
    } else {
        out.la = la;
        out.ld = ld;
        out.raw_churn = (la > 0.0 || ld > 0.0);
    }
    out.lt = lt / nf;
    out.nuc = nuc / nf;
    return out;
}

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;
};

inline double recall(const ConfusionCounts& c) {
    if (c.tp + c.fn == 0) fail(errc::undefined, "recall undefined: tp + fn = 0");
    return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

inline double precision(const ConfusionCounts& c) {
    if (c.tp + c.fp == 0) fail(errc::undefined, "precision undefined: tp + fp = 0");
    return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

}  // namespace jitdp
