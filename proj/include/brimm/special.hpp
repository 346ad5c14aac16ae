#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/gamma.hpp>

#include "brimm/errors.hpp"
#include "brimm/quadrature.hpp"

namespace brimm {

namespace detail {

// Power series sum_k z^k / Gamma(1 + beta k).  Returns NaN when the largest
// intermediate term is big enough that cancellation would destroy the sum
// (the alternating series loses lg(max_term) digits).
inline double ml_series_neg(double beta, double z) {
    double sum = 1.0;
    double max_term = 1.0;
    for (int k = 1; k < 400; ++k) {
        const double log_term = k * std::log(-z) - std::lgamma(1.0 + beta * k);
        const double term = (k % 2 == 0 ? 1.0 : -1.0) * std::exp(log_term);
        sum += term;
        max_term = std::max(max_term, std::abs(term));
        if (max_term > 1e4) return std::numeric_limits<double>::quiet_NaN();
        if (std::abs(term) < 1e-17 * std::max(1.0, std::abs(sum)) && k > 4)
            return sum;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

// Completely monotone representation E_beta(-t^beta) = int_0^inf e^{-rt} K(r) dr
// with spectral density K(r) = sin(beta pi)/pi * r^{beta-1} /
// (r^{2 beta} + 2 r^beta cos(beta pi) + 1).  Valid for beta in (0,1).
inline double ml_spectral_neg(double beta, double z) {
    const double t = std::pow(-z, 1.0 / beta);
    const double sb = std::sin(beta * M_PI);
    const double cb = std::cos(beta * M_PI);
    auto density = [&](double r) {
        const double rb = std::pow(r, beta);
        return (sb / M_PI) * std::pow(r, beta - 1.0) /
               (rb * rb + 2.0 * rb * cb + 1.0) * std::exp(-r * t);
    };
    const double head = integrate_singular(density, 0.0, 1.0, 1e-13);
    const double tail = integrate_to_inf(density, 1.0, 1e-13);
    return head + tail;
}

} // namespace detail

// Mittag-Leffler function E_beta(z) on the closed negative half-line,
// beta in (0,1].  E_1(z) = exp(z) exactly.
inline double mittag_leffler_neg(double beta, double z) {
    require(beta > 0.0 && beta <= 1.0, ErrorCode::invalid_argument,
            "mittag_leffler_neg requires beta in (0,1]");
    require(z <= 0.0, ErrorCode::invalid_argument,
            "mittag_leffler_neg requires z <= 0");
    if (beta == 1.0) return std::exp(z);
    if (z == 0.0) return 1.0;
    const double s = detail::ml_series_neg(beta, z);
    if (std::isfinite(s)) return s;
    return detail::ml_spectral_neg(beta, z);
}

// Survival function of a Mittag-Leffler interarrival: P(T > t) = E_beta(-lambda t^beta).
inline double mittag_leffler_survival(double beta, double lambda, double t) {
    require(lambda > 0.0 && t >= 0.0, ErrorCode::invalid_argument,
            "mittag_leffler_survival parameters out of range");
    return mittag_leffler_neg(beta, -lambda * std::pow(t, beta));
}

// Kolmogorov limiting survival Q(x) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2).
inline double kolmogorov_survival(double x) {
    if (x <= 0.0) return 1.0;
    if (x > 10.0) return 0.0;
    double sum = 0.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = (k % 2 == 1 ? 2.0 : -2.0) * std::exp(-2.0 * k * k * x * x);
        sum += term;
        if (std::abs(term) < 1e-16) break;
    }
    return std::min(1.0, std::max(0.0, sum));
}

// One-sample KS p-value with the Stephens small-sample correction.
inline double ks_p_value(double d, std::uint64_t n) {
    const double sn = std::sqrt(static_cast<double>(n));
    return kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d);
}

// Two-sample KS p-value through the effective sample size n1 n2/(n1+n2).
inline double ks_two_sample_p_value(double d, std::uint64_t n1, std::uint64_t n2) {
    const double ne = static_cast<double>(n1) * static_cast<double>(n2) /
                      static_cast<double>(n1 + n2);
    const double sn = std::sqrt(ne);
    return kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d);
}

inline double chi_squared_survival(double stat, double dof) {
    if (stat <= 0.0) return 1.0;
    boost::math::chi_squared_distribution<double> dist(dof);
    return boost::math::cdf(boost::math::complement(dist, stat));
}

// CDF of Gamma(shape, rate) in the shape/rate convention.
inline double gamma_cdf(double x, double shape, double rate) {
    if (x <= 0.0) return 0.0;
    boost::math::gamma_distribution<double> dist(shape, 1.0 / rate);
    return boost::math::cdf(dist, x);
}

inline double poisson_pmf(std::uint64_t k, double mean) {
    if (mean <= 0.0) return k == 0 ? 1.0 : 0.0;
    return std::exp(static_cast<double>(k) * std::log(mean) - mean -
                    std::lgamma(static_cast<double>(k) + 1.0));
}

} // namespace brimm
