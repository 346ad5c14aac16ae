#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "brimm/errors.hpp"
#include "brimm/estimate.hpp"
#include "brimm/kernels.hpp"
#include "brimm/point_processes.hpp"
#include "brimm/quadrature.hpp"
#include "brimm/rng.hpp"
#include "brimm/subordinator.hpp"

namespace brimm {

// Nonnegative test function with declared compact support [0, support_end].
struct TestFunction {
    std::function<double(double)> fn;
    double support_end = 0.0;

    double operator()(double x) const {
        if (x < 0.0 || x > support_end) return 0.0;
        return fn(x);
    }

    static TestFunction indicator(double height, double end) {
        require(height >= 0.0 && end >= 0.0, ErrorCode::invalid_argument,
                "indicator test function needs height, end >= 0");
        return {[height](double) { return height; }, end};
    }

    static TestFunction zero() { return {[](double) { return 0.0; }, 0.0}; }
};

// L_Phi(f) = exp(-int (1 - e^{-f}) dLambda) for a Poisson process.
inline double laplace_poisson(const TestFunction& f, const IntensityDensity& density,
                              double abs_tol = 1e-10) {
    if (f.support_end <= 0.0) return 1.0;
    const double exponent = integrate(
        [&](double x) { return (1.0 - std::exp(-f(x))) * density(x); }, 0.0,
        f.support_end, abs_tol, 1e-12);
    return std::exp(-exponent);
}

namespace detail {

// Van der Corput radical inverse in the given prime base.
inline double radical_inverse(std::uint64_t index, std::uint64_t base) {
    double inv_base = 1.0 / static_cast<double>(base);
    double scale = inv_base;
    double result = 0.0;
    while (index > 0) {
        result += static_cast<double>(index % base) * scale;
        index /= base;
        scale *= inv_base;
    }
    return result;
}

inline const std::vector<std::uint64_t>& small_primes() {
    static const std::vector<std::uint64_t> primes = {2,  3,  5,  7,  11, 13,
                                                      17, 19, 23, 29, 31, 37};
    return primes;
}

} // namespace detail

struct DppSeriesResult {
    double value = 1.0;
    double tail_bound = 0.0;  // Hadamard-geometric bound on the dropped tail
    int terms_used = 0;
};

// Alternating joint-intensity series for the DPP Laplace functional:
//   1 + sum_n (-1)^n/n! int det(K(x_i,x_j)) prod(1 - e^{-f(x_i)}) Lambda(dx).
// Term n is evaluated by tensor Gauss-Legendre for n <= 3 and Halton
// quasi-Monte Carlo above; |term_n| <= c^n/n! with
// c = int K(x,x)(1-e^{-f}) dLambda certifies the dropped tail.
inline DppSeriesResult laplace_dpp_series(const TestFunction& f, const KernelSpec& kernel,
                                          int n_max = 12, int n_quad_axis = 24,
                                          int qmc_points = 32768,
                                          double tail_tol = 1e-6) {
    DppSeriesResult result;
    const double support = f.support_end;
    if (support <= 0.0) return result;

    auto phi = [&](double x) { return 1.0 - std::exp(-f(x)); };

    // One-dimensional masses: c for the Hadamard bound (and the exact series
    // when the kernel is the identity on the diagonal).
    const double c = integrate(
        [&](double x) { return kernel.diagonal(x) * phi(x) * kernel.density(x); }, 0.0,
        support, 1e-11, 1e-10);

    double value = 1.0;
    double sign = 1.0;
    double factorial = 1.0;
    int used = 0;
    if (kernel.is_poisson()) {
        // rho_n = 1 Lambda-a.e.: the term integrals factorise into c^n.
        double cn = 1.0;
        for (int n = 1; n <= n_max; ++n) {
            sign = -sign;
            factorial *= n;
            cn *= c;
            value += sign * cn / factorial;
            used = n;
        }
    } else {
        // Halton bases cap the QMC dimension; the tail bound below still
        // certifies whatever is dropped.
        n_max = std::min<int>(n_max, static_cast<int>(detail::small_primes().size()));
        std::vector<QuadNode> axis = gauss_legendre(n_quad_axis, 0.0, support);
        for (int n = 1; n <= n_max; ++n) {
            sign = -sign;
            factorial *= n;
            // Skip negligible terms; they are covered by the tail bound.
            if (std::pow(c, n) / factorial < 1e-16) break;
            double integral = 0.0;
            if (n <= 3) {
                std::vector<int> idx(n, 0);
                std::vector<double> pts(n);
                for (;;) {
                    double weight = 1.0;
                    for (int k = 0; k < n; ++k) {
                        pts[k] = axis[idx[k]].x;
                        weight *= axis[idx[k]].w * phi(pts[k]) * kernel.density(pts[k]);
                    }
                    if (weight != 0.0)
                        integral += weight * joint_intensity(kernel, pts);
                    int k = 0;
                    while (k < n && ++idx[k] == n_quad_axis) idx[k++] = 0;
                    if (k == n) break;
                }
            } else {
                const auto& primes = detail::small_primes();
                std::vector<double> pts(n);
                double acc = 0.0;
                for (int p = 0; p < qmc_points; ++p) {
                    double weight = 1.0;
                    for (int k = 0; k < n; ++k) {
                        pts[k] = support * detail::radical_inverse(p + 1, primes[k]);
                        weight *= phi(pts[k]) * kernel.density(pts[k]);
                    }
                    if (weight != 0.0) acc += weight * joint_intensity(kernel, pts);
                }
                integral = acc / qmc_points * std::pow(support, n);
            }
            value += sign * integral / factorial;
            used = n;
        }
    }

    // Tail after the last computed term: sum_{n > used} c^n / n!.
    double tail = 0.0;
    double term = 1.0;
    for (int n = 1; n <= used; ++n) term *= c / n;
    for (int n = used + 1; n <= used + 200; ++n) {
        term *= c / n;
        tail += term;
        if (term < 1e-18 * std::max(tail, 1.0)) break;
    }
    require(tail <= tail_tol, ErrorCode::truncation_too_loose,
            "series tail bound " + std::to_string(tail) + " above tolerance");
    result.value = value;
    result.tail_bound = tail;
    result.terms_used = used;
    return result;
}

// Same functional as det(I - K_phi) with K_phi = sqrt(phi) K sqrt(phi),
// phi = 1 - e^{-f}:
//  - spectral kernels reduce exactly to a rank-r determinant det(I_r - B),
//    B_{mn} = sqrt(l_m l_n) <phi_m, phi phi_n>_Lambda;
//  - smooth kernels are Nystrom-discretised with symmetric weighting on the
//    support of f.
inline double laplace_dpp_fredholm(const TestFunction& f, const KernelSpec& kernel,
                                   int n_quad = 200) {
    const double support = f.support_end;
    if (support <= 0.0) return 1.0;
    auto phi = [&](double x) { return 1.0 - std::exp(-f(x)); };

    if (kernel.is_poisson()) {
        // The identity kernel is the a.e.-zero integral operator; the
        // functional is the Poisson one.
        return laplace_poisson(f, kernel.density);
    }

    if (const auto* s = std::get_if<SpectralExpansionKernel>(&kernel.variant)) {
        const int r = static_cast<int>(s->eigenvalues.size());
        Eigen::MatrixXd b(r, r);
        for (int m = 0; m < r; ++m)
            for (int n = m; n < r; ++n) {
                const double overlap = integrate(
                    [&](double x) {
                        return phi(x) * s->basis[m](x) * s->basis[n](x) *
                               kernel.density(x);
                    },
                    0.0, support, 1e-11, 1e-10);
                b(m, n) = b(n, m) =
                    std::sqrt(s->eigenvalues[m] * s->eigenvalues[n]) * overlap;
            }
        return (Eigen::MatrixXd::Identity(r, r) - b).determinant();
    }

    // Admissibility on the support, mirroring sample_dpp's eigenvalue check.
    (void)SpectralBasis::nystrom(kernel, 0.0, support, std::min(n_quad, 200));

    const auto nodes = gauss_legendre(n_quad, 0.0, support);
    Eigen::MatrixXd m(n_quad, n_quad);
    std::vector<double> half_weight(n_quad);
    for (int i = 0; i < n_quad; ++i)
        half_weight[i] =
            std::sqrt(std::max(0.0, nodes[i].w * kernel.density(nodes[i].x) *
                                        phi(nodes[i].x)));
    for (int i = 0; i < n_quad; ++i)
        for (int j = 0; j < n_quad; ++j)
            m(i, j) = half_weight[i] * kernel.value(nodes[i].x, nodes[j].x) *
                      half_weight[j];
    return (Eigen::MatrixXd::Identity(n_quad, n_quad) - m).determinant();
}

// Monte Carlo average of exp(-int (1-e^{-f}) eta(dx)) over directing draws.
inline MCEstimate laplace_cox_mc(const TestFunction& f, const CoxDirecting& directing,
                                 int n_rep, RngStream& rng) {
    require(n_rep > 0, ErrorCode::invalid_argument, "n_rep must be positive");
    const double support = f.support_end;
    MeanAccumulator acc;
    if (const auto* g = std::get_if<GammaMixedRate>(&directing)) {
        // eta = R Lebesgue: the integral factorises through a single quadrature.
        const double base =
            support <= 0.0
                ? 0.0
                : integrate([&](double x) { return 1.0 - std::exp(-f(x)); }, 0.0,
                            support, 1e-11, 1e-10);
        for (int i = 0; i < n_rep; ++i)
            acc.add(std::exp(-rng.gamma(g->shape, g->rate) * base));
        return acc.estimate();
    }
    for (int i = 0; i < n_rep; ++i) {
        const auto real = sample_cox_directing(directing, support, rng);
        double exponent = 0.0;
        if (support > 0.0) {
            // Piecewise over the directing density's discontinuities.
            double left = 0.0;
            // Piece tolerance 1e-8: far below the Monte Carlo standard error,
            // and above the floor of the Gauss-Kronrod error estimator on
            // short subintervals.
            auto piece = [&](double a, double b) {
                if (b > a)
                    exponent += integrate(
                        [&](double x) {
                            return (1.0 - std::exp(-f(x))) * real.directing(x);
                        },
                        a, b, 1e-8, 1e-8);
            };
            for (double brk : real.breakpoints) {
                if (brk >= support) break;
                piece(left, brk);
                left = brk;
            }
            piece(left, support);
        }
        acc.add(std::exp(-exponent));
    }
    return acc.estimate();
}

// Monte Carlo average of exp(-lambda int (1-e^{-f}) dY_beta) over inverse
// subordinator paths (Stieltjes sums on the operational grid).
inline MCEstimate laplace_fpp_mc(const TestFunction& f, double beta, double lambda,
                                 int n_rep, RngStream& rng, double grid_step = 0.0) {
    require(beta > 0.0 && beta < 1.0, ErrorCode::invalid_argument,
            "laplace_fpp_mc requires beta in (0,1)");
    require(n_rep > 0, ErrorCode::invalid_argument, "n_rep must be positive");
    const double support = f.support_end;
    if (support <= 0.0) return {1.0, 0.0, static_cast<std::uint64_t>(n_rep)};
    if (grid_step <= 0.0) grid_step = default_subordinator_step(support);
    MeanAccumulator acc;
    for (int i = 0; i < n_rep; ++i) {
        const auto path = sample_inverse_subordinator(beta, support, grid_step, rng);
        const double integral =
            path.integrate([&](double t) { return 1.0 - std::exp(-f(t)); });
        acc.add(std::exp(-lambda * integral));
    }
    return acc.estimate();
}

} // namespace brimm
