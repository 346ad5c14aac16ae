#pragma once

#include <stdexcept>
#include <string>

namespace brimm {

// Every failure mode the library reports deliberately, as opposed to
// programming errors (those stay std::logic_error / assertions).
enum class ErrorCode {
    invalid_argument,
    non_primitive,
    degenerate,
    zero_q,
    bad_envelope,
    grid_too_coarse,
    eigen_out_of_range,
    quadrature_failure,
    truncation_too_loose,
    ode_tolerance_failure,
    empty_sample,
    population_overflow,
    condition_violated,
    not_critical,
    not_subcritical,
    config_error,
    io_error,
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::invalid_argument:      return "InvalidArgument";
        case ErrorCode::non_primitive:         return "NonPrimitive";
        case ErrorCode::degenerate:            return "Degenerate";
        case ErrorCode::zero_q:                return "ZeroQ";
        case ErrorCode::bad_envelope:          return "BadEnvelope";
        case ErrorCode::grid_too_coarse:       return "GridTooCoarse";
        case ErrorCode::eigen_out_of_range:    return "EigenOutOfRange";
        case ErrorCode::quadrature_failure:    return "QuadratureFailure";
        case ErrorCode::truncation_too_loose:  return "TruncationTooLoose";
        case ErrorCode::ode_tolerance_failure: return "OdeToleranceFailure";
        case ErrorCode::empty_sample:          return "EmptySample";
        case ErrorCode::population_overflow:   return "PopulationOverflow";
        case ErrorCode::condition_violated:    return "ConditionViolated";
        case ErrorCode::not_critical:          return "NotCritical";
        case ErrorCode::not_subcritical:       return "NotSubcritical";
        case ErrorCode::config_error:          return "ConfigError";
        case ErrorCode::io_error:              return "IoError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
          code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) raise(code, what);
}

} // namespace brimm
