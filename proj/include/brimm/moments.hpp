#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "brimm/errors.hpp"
#include "brimm/expm.hpp"
#include "brimm/kernels.hpp"
#include "brimm/model.hpp"
#include "brimm/quadrature.hpp"

namespace brimm {

// First and second moments of the no-immigration process on a uniform grid:
//   dm/dt = A^t m
//   dS/dt = A^t S + S A + R(t),  R_jl = sum_i m_i(t) c^(i)_jl / mu_i,
// with c^(i)_jl = E[((nu_i)_j - 1{i=j})((nu_i)_l - 1{i=l})].  RK4 with a
// step-doubling tolerance check; queries use cubic Hermite interpolation with
// the exact ODE slopes at the bracketing grid points.
class MomentTable {
public:
    MomentTable(const BranchingSpec& spec, Vec initial_mean, Mat initial_second,
                double t_max, double step = 1e-3, double tol = 1e-8)
        : a_(generator_matrix(spec)), t_max_(std::max(t_max, 1e-12)) {
        const int d = spec.num_types();
        jump_cov_.reserve(d);
        for (int i = 0; i < d; ++i) {
            const Mat sec = spec.offspring[i].second_moment();
            const Vec mean = spec.offspring[i].mean();
            Mat c = sec;
            for (int j = 0; j < d; ++j)
                for (int l = 0; l < d; ++l) {
                    if (i == j) c(j, l) -= mean[l];
                    if (i == l) c(j, l) -= mean[j];
                    if (i == j && i == l) c(j, l) += 1.0;
                }
            jump_cov_.push_back(c / spec.lifetimes[i]);
        }

        step_ = std::max(step, t_max_ / 50000.0);
        const auto n_steps = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::ceil(t_max_ / step_)));
        step_ = t_max_ / static_cast<double>(n_steps);

        integrate_grid(initial_mean, initial_second, n_steps, step_, mean_, second_);

        std::vector<Vec> mean_half;
        std::vector<Mat> second_half;
        integrate_grid(initial_mean, initial_second, 2 * n_steps, 0.5 * step_,
                       mean_half, second_half);
        const double mean_err = (mean_.back() - mean_half.back()).cwiseAbs().maxCoeff();
        const double second_err =
            (second_.back() - second_half.back()).cwiseAbs().maxCoeff();
        const double scale = 1.0 + second_half.back().cwiseAbs().maxCoeff();
        require(mean_err <= tol * scale && second_err <= tol * scale,
                ErrorCode::ode_tolerance_failure,
                "moment ODE step-doubling error above tolerance");
    }

    static MomentTable from_immigrant_law(const BranchingSpec& spec, double t_max,
                                          double step = 1e-3, double tol = 1e-8) {
        return MomentTable(spec, spec.immigrant_law.mean(),
                           spec.immigrant_law.second_moment(), t_max, step, tol);
    }

    static MomentTable from_unit(const BranchingSpec& spec, int k, double t_max,
                                 double step = 1e-3, double tol = 1e-8) {
        const int d = spec.num_types();
        Vec m0 = Vec::Zero(d);
        m0[k] = 1.0;
        return MomentTable(spec, m0, m0 * m0.transpose(), t_max, step, tol);
    }

    double t_max() const { return t_max_; }

    Vec mean_at(double t) const {
        const auto [i, theta, inside] = locate(t);
        if (!inside) return mean_[i];
        const Vec d0 = step_ * (a_.transpose() * mean_[i]);
        const Vec d1 = step_ * (a_.transpose() * mean_[i + 1]);
        return hermite(theta, mean_[i], mean_[i + 1], d0, d1);
    }

    Mat second_at(double t) const {
        const auto [i, theta, inside] = locate(t);
        if (!inside) return second_[i];
        const Mat d0 = step_ * second_rhs(mean_[i], second_[i]);
        const Mat d1 = step_ * second_rhs(mean_[i + 1], second_[i + 1]);
        return hermite(theta, second_[i], second_[i + 1], d0, d1);
    }

    static Mat generator_matrix(const BranchingSpec& spec) {
        const int d = spec.num_types();
        const Mat m = spec.mean_offspring_matrix();
        Mat a(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                a(i, j) = (m(i, j) - (i == j ? 1.0 : 0.0)) / spec.lifetimes[i];
        return a;
    }

private:
    struct Location {
        std::size_t index;
        double theta;
        bool inside;
    };

    Location locate(double t) const {
        require(t >= 0.0 && t <= t_max_ * (1.0 + 1e-12), ErrorCode::invalid_argument,
                "moment table queried outside [0, t_max]");
        const double pos = std::min(t / step_, static_cast<double>(mean_.size() - 1));
        const auto i = static_cast<std::size_t>(pos);
        if (i + 1 >= mean_.size()) return {mean_.size() - 1, 0.0, false};
        return {i, pos - static_cast<double>(i), true};
    }

    template <typename T>
    static T hermite(double theta, const T& y0, const T& y1, const T& d0, const T& d1) {
        const double h00 = (1.0 + 2.0 * theta) * (1.0 - theta) * (1.0 - theta);
        const double h10 = theta * (1.0 - theta) * (1.0 - theta);
        const double h01 = theta * theta * (3.0 - 2.0 * theta);
        const double h11 = theta * theta * (theta - 1.0);
        return h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1;
    }

    Mat second_rhs(const Vec& m, const Mat& s) const {
        Mat r = a_.transpose() * s + s * a_;
        for (std::size_t i = 0; i < jump_cov_.size(); ++i) r += m[i] * jump_cov_[i];
        return r;
    }

    void integrate_grid(const Vec& m0, const Mat& s0, std::size_t n_steps, double h,
                        std::vector<Vec>& means, std::vector<Mat>& seconds) const {
        means.clear();
        seconds.clear();
        means.reserve(n_steps + 1);
        seconds.reserve(n_steps + 1);
        Vec m = m0;
        Mat s = s0;
        means.push_back(m);
        seconds.push_back(s);
        const Mat at = a_.transpose();
        for (std::size_t i = 0; i < n_steps; ++i) {
            const Vec mk1 = at * m;
            const Mat sk1 = second_rhs(m, s);
            const Vec mk2 = at * (m + 0.5 * h * mk1);
            const Mat sk2 = second_rhs(m + 0.5 * h * mk1, s + 0.5 * h * sk1);
            const Vec mk3 = at * (m + 0.5 * h * mk2);
            const Mat sk3 = second_rhs(m + 0.5 * h * mk2, s + 0.5 * h * sk2);
            const Vec mk4 = at * (m + h * mk3);
            const Mat sk4 = second_rhs(m + h * mk3, s + h * sk3);
            m += (h / 6.0) * (mk1 + 2.0 * mk2 + 2.0 * mk3 + mk4);
            s += (h / 6.0) * (sk1 + 2.0 * sk2 + 2.0 * sk3 + sk4);
            means.push_back(m);
            seconds.push_back(s);
        }
    }

    Mat a_;
    double t_max_;
    double step_ = 1e-3;
    std::vector<Mat> jump_cov_;
    std::vector<Vec> mean_;
    std::vector<Mat> second_;
};

// Mean matrix m_kj(t) = E[Z_{x,j}(t) | one particle of type k] = (e^{A t})_kj.
inline Mat mean_matrix_no_immigration(const BranchingSpec& spec, double t) {
    return expm(MomentTable::generator_matrix(spec) * t);
}

struct MomentReport {
    double t = 0.0;
    Vec mean;
    Mat covariance;
    Vec mean_quad_error;
    Mat cov_quad_error;
};

// Mean under DPP immigration:
//   E[Z_i(t)] = int_0^t K(x,x) E[Z_{x,i}(t-x)] Lambda(dx),
// with Z_x started from the immigrant law.
inline Vec mean_with_immigration(const BranchingSpec& spec, const KernelSpec& kernel,
                                 double t, double rel_tol = 1e-8,
                                 Vec* quad_error = nullptr) {
    const int d = spec.num_types();
    Vec out = Vec::Zero(d);
    if (quad_error) *quad_error = Vec::Zero(d);
    if (t <= 0.0) return out;
    const MomentTable table = MomentTable::from_immigrant_law(spec, t);
    for (int i = 0; i < d; ++i) {
        auto [value, err] = integrate_with_error(
            [&](double x) {
                return kernel.diagonal(x) * table.mean_at(t - x) [i] *
                       kernel.density(x);
            },
            0.0, t, rel_tol, rel_tol);
        out[i] = value;
        if (quad_error) (*quad_error)[i] = err;
    }
    return out;
}

// Covariance under DPP immigration:
//   Cov(Z_i,Z_j)(t) = int K(x,x) E[Z_{x,i}(t-x) Z_{x,j}(t-x)] Lambda(dx)
//                   - int int K^2(x,y) E[Z_{x,i}(t-x)] E[Z_{x,j}(t-y)]
//                             Lambda(dx) Lambda(dy).
// The K^2 term vanishes for the identity kernel against a diffuse Lambda.
inline Mat covariance_with_immigration(const BranchingSpec& spec,
                                       const KernelSpec& kernel, double t,
                                       double rel_tol = 1e-8,
                                       Mat* quad_error = nullptr) {
    const int d = spec.num_types();
    Mat cov = Mat::Zero(d, d);
    if (quad_error) *quad_error = Mat::Zero(d, d);
    if (t <= 0.0) return cov;
    const MomentTable table = MomentTable::from_immigrant_law(spec, t);

    Mat err_acc = Mat::Zero(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            auto [value, err] = integrate_with_error(
                [&](double x) {
                    return kernel.diagonal(x) * table.second_at(t - x)(i, j) *
                           kernel.density(x);
                },
                0.0, t, rel_tol, rel_tol);
            cov(i, j) = cov(j, i) = value;
            err_acc(i, j) = err_acc(j, i) = err;
        }

    if (!kernel.is_poisson()) {
        // Iterated adaptive quadrature of the K^2 double integral.
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) {
                auto inner = [&](double x) {
                    return integrate(
                        [&](double y) {
                            const double k = kernel.value(x, y);
                            return k * k * table.mean_at(t - y)[j] *
                                   kernel.density(y);
                        },
                        0.0, t, rel_tol * 0.1, rel_tol * 0.1);
                };
                auto [value, err] = integrate_with_error(
                    [&](double x) {
                        return inner(x) * table.mean_at(t - x)[i] * kernel.density(x);
                    },
                    0.0, t, rel_tol, rel_tol);
                cov(i, j) -= value;
                cov(j, i) = cov(i, j);
                err_acc(i, j) += err;
                err_acc(j, i) = err_acc(i, j);
            }
    }

    // Clamp tiny negative diagonals from quadrature noise.
    for (int i = 0; i < d; ++i)
        if (cov(i, i) < 0.0) {
            require(cov(i, i) > -1e-6 * (1.0 + err_acc(i, i)),
                    ErrorCode::quadrature_failure,
                    "covariance diagonal significantly negative");
            cov(i, i) = 0.0;
        }
    if (quad_error) *quad_error = err_acc;
    return cov;
}

inline MomentReport moment_report(const BranchingSpec& spec, const KernelSpec& kernel,
                                  double t, double rel_tol = 1e-8) {
    MomentReport report;
    report.t = t;
    report.mean = mean_with_immigration(spec, kernel, t, rel_tol,
                                        &report.mean_quad_error);
    report.covariance = covariance_with_immigration(spec, kernel, t, rel_tol,
                                                    &report.cov_quad_error);
    return report;
}

// ---------------------------------------------------------------------------
// Convolution asymptotics diagnostics
// ---------------------------------------------------------------------------

enum class ConvRegime {
    exponential_growth,  // alpha(t) ~ alpha_inf e^{delta t}, e^{-delta x} beta integrable
    both_converge,       // alpha -> alpha_inf, beta -> beta_inf
};

struct ConvDiagnostics {
    double t = 0.0;
    double convolution = 0.0;
    double predictor = 0.0;
    double ratio = 0.0;
};

struct ConvInputs {
    std::function<double(double)> alpha;
    std::function<double(double)> beta;
    double alpha_inf = 1.0;
    double delta = 0.0;     // growth rate of alpha (exponential_growth only)
    double beta_inf = 1.0;  // limit of beta (both_converge only)
};

// Numerically reproduces the convolution lemma: the ratio of
// int_0^t beta(t-x) alpha(x) dx to the asymptotic predictor tends to 1.
inline std::vector<ConvDiagnostics> conv_asymptote(const ConvInputs& in,
                                                   ConvRegime regime,
                                                   std::span<const double> t_grid) {
    double beta_transform = 0.0;
    if (regime == ConvRegime::exponential_growth)
        beta_transform = integrate_to_inf(
            [&](double x) { return std::exp(-in.delta * x) * in.beta(x); }, 0.0);
    std::vector<ConvDiagnostics> out;
    out.reserve(t_grid.size());
    for (double t : t_grid) {
        ConvDiagnostics diag;
        diag.t = t;
        diag.convolution =
            integrate([&](double x) { return in.beta(t - x) * in.alpha(x); }, 0.0, t,
                      1e-10, 1e-10);
        diag.predictor = regime == ConvRegime::exponential_growth
                             ? in.alpha(t) * beta_transform
                             : in.alpha_inf * in.beta_inf * t;
        diag.ratio = diag.predictor != 0.0 ? diag.convolution / diag.predictor : 0.0;
        out.push_back(diag);
    }
    return out;
}

} // namespace brimm
