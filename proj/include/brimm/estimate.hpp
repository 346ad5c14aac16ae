#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "brimm/errors.hpp"

namespace brimm {

// Universal carrier for Monte Carlo results.
struct MCEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::uint64_t n = 0;

    // |value - other.value| measured in combined standard errors.
    double sigma_distance(const MCEstimate& other) const {
        const double se = std::sqrt(std_error * std_error +
                                    other.std_error * other.std_error);
        if (se == 0.0) return value == other.value ? 0.0 : INFINITY;
        return std::abs(value - other.value) / se;
    }

    double sigma_distance(double reference) const {
        if (std_error == 0.0) return value == reference ? 0.0 : INFINITY;
        return std::abs(value - reference) / std_error;
    }
};

class MeanAccumulator {
public:
    void add(double x) {
        sum_ += x;
        sum_sq_ += x * x;
        ++n_;
    }

    std::uint64_t count() const { return n_; }
    double sum() const { return sum_; }

    double mean() const {
        require(n_ > 0, ErrorCode::empty_sample, "mean of empty accumulator");
        return sum_ / static_cast<double>(n_);
    }

    // Population-unbiased sample variance.
    double variance() const {
        require(n_ > 1, ErrorCode::empty_sample, "variance needs n >= 2");
        const double n = static_cast<double>(n_);
        const double v = (sum_sq_ - sum_ * sum_ / n) / (n - 1.0);
        return v > 0.0 ? v : 0.0;
    }

    MCEstimate estimate() const {
        MCEstimate e;
        e.value = mean();
        e.n = n_;
        e.std_error = n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
        return e;
    }

private:
    double sum_ = 0.0;
    double sum_sq_ = 0.0;
    std::uint64_t n_ = 0;
};

inline MCEstimate mc_estimate(const std::vector<double>& samples) {
    MeanAccumulator acc;
    for (double x : samples) acc.add(x);
    return acc.estimate();
}

} // namespace brimm
