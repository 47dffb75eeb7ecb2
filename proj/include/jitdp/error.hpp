#pragma once

#include <stdexcept>
#include <string>

namespace jitdp {

// Stable error codes shared by the library and the CLI. Every throw site
// names the offending column/row/value in the message.
enum class errc {
    schema,            // required column missing
    parse,             // cell not parseable / violates a field invariant
    label,             // label not interpretable as binary
    unknown_feature,   // requested feature does not exist
    prob,              // probability profile invalid
    empty,             // operation needs a non-empty input
    nf,                // file count < 1
    undefined,         // metric denominator is zero
    one_class,         // dataset holds a single class
    log_domain,        // strict log on a non-positive cell
    missing_params,    // normalization params do not cover a column
    too_small,         // not enough rows
    dim,               // dimension mismatch
    degenerate,        // input degenerate for the requested decomposition
    feature_mismatch,  // dataset features do not match a fitted model
    io,                // file read/write failure
    nonfinite,         // a loss or parameter became non-finite
    spec,              // invalid specification / configuration
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::schema: return "E_SCHEMA";
        case errc::parse: return "E_PARSE";
        case errc::label: return "E_LABEL";
        case errc::unknown_feature: return "E_UNKNOWN_FEATURE";
        case errc::prob: return "E_PROB";
        case errc::empty: return "E_EMPTY";
        case errc::nf: return "E_NF";
        case errc::undefined: return "E_UNDEFINED";
        case errc::one_class: return "E_ONE_CLASS";
        case errc::log_domain: return "E_LOG_DOMAIN";
        case errc::missing_params: return "E_MISSING_PARAMS";
        case errc::too_small: return "E_TOO_SMALL";
        case errc::dim: return "E_DIM";
        case errc::degenerate: return "E_DEGENERATE";
        case errc::feature_mismatch: return "E_FEATURE_MISMATCH";
        case errc::io: return "E_IO";
        case errc::nonfinite: return "E_NONFINITE";
        case errc::spec: return "E_SPEC";
    }
    return "E_UNKNOWN";
}

class Error : public std::runtime_error {
public:
    Error(errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) {
    throw Error(code, what);
}

}  // namespace jitdp
