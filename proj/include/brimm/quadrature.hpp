#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "brimm/errors.hpp"

namespace brimm {

// Adaptive Gauss-Kronrod on a finite interval.  The tolerance contract is
// absolute-or-relative: the run fails only if the reported error estimate
// exceeds both.  The termination tolerance handed to the recursion must stay
// above ~1e-11: asking for less makes it subdivide into roundoff noise, whose
// per-interval estimates then accumulate into a spurious large total.
template <typename F>
std::pair<double, double> integrate_with_error(F&& f, double a, double b,
                                               double abs_tol = 1e-10,
                                               double rel_tol = 1e-10) {
    if (a == b) return {0.0, 0.0};
    double error = 0.0;
    double l1 = 0.0;
    const double termination =
        std::min(1e-3, std::max({1e-11, 0.1 * rel_tol, 0.01 * abs_tol}));
    const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        f, a, b, 18, termination, &error, &l1);
    // An integrand whose whole L1 mass sits below the absolute tolerance is
    // within tolerance no matter what the noise-level error estimate says.
    if (error > abs_tol && error > rel_tol * std::abs(value) && l1 > abs_tol)
        raise(ErrorCode::quadrature_failure,
              "adaptive quadrature error estimate " + std::to_string(error) +
                  " above tolerance");
    return {value, error};
}

template <typename F>
double integrate(F&& f, double a, double b,
                 double abs_tol = 1e-10, double rel_tol = 1e-10) {
    return integrate_with_error(f, a, b, abs_tol, rel_tol).first;
}

// Semi-infinite integral of a decaying integrand over (a, inf).
template <typename F>
double integrate_to_inf(F&& f, double a, double tol = 1e-12) {
    boost::math::quadrature::exp_sinh<double> integrator;
    double error = 0.0;
    double l1 = 0.0;
    auto shifted = [&](double x) { return f(a + x); };
    const double value = integrator.integrate(shifted, tol, &error, &l1);
    if (error > 100 * tol && error > 1e-8 * std::abs(value))
        raise(ErrorCode::quadrature_failure, "exp_sinh error estimate above tolerance");
    return value;
}

// Finite interval with integrable endpoint singularities.
template <typename F>
double integrate_singular(F&& f, double a, double b, double tol = 1e-12) {
    boost::math::quadrature::tanh_sinh<double> integrator;
    return integrator.integrate(f, a, b, tol);
}

struct QuadNode {
    double x;
    double w;
};

// Gauss-Legendre nodes/weights on [a,b], computed by Newton iteration on the
// Legendre recurrence.  Good to near machine precision for n up to several
// hundred, which covers the Nystrom discretizations used here.
inline std::vector<QuadNode> gauss_legendre(int n, double a, double b) {
    require(n >= 1, ErrorCode::invalid_argument, "gauss_legendre needs n >= 1");
    std::vector<QuadNode> nodes(n);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Tricomi initial guess for the i-th root of P_n.
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * pp * pp);
        nodes[i] = {mid - half * x, half * w};
        nodes[n - 1 - i] = {mid + half * x, half * w};
    }
    return nodes;
}

} // namespace brimm
