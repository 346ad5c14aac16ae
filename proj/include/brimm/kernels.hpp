#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "brimm/errors.hpp"
#include "brimm/intensity.hpp"
#include "brimm/quadrature.hpp"

namespace brimm {

// K(x,y) = 1{x = y}: joint intensities are 1 a.e., so the process degenerates
// to the Lambda-Poisson process.
struct PoissonIdentityKernel {};

// Shift-invariant Gaussian kernel K(x,y) = exp(-(x-y)^2 / (2 scale^2)) / pi.
struct GinibreGaussianKernel {
    double scale = 1.0;
};

// Regular kernel K(x,y) = sum_n lambda_n phi_n(x) phi_n(y) with phi_n
// orthonormal in L^2(Lambda) on the window and lambda_n in [0,1].
struct SpectralExpansionKernel {
    std::vector<double> eigenvalues;
    std::vector<std::function<double(double)>> basis;
};

struct KernelSpec {
    std::variant<PoissonIdentityKernel, GinibreGaussianKernel, SpectralExpansionKernel>
        variant;
    IntensityDensity density;

    bool is_poisson() const {
        return std::holds_alternative<PoissonIdentityKernel>(variant);
    }

    double value(double x, double y) const {
        if (const auto* g = std::get_if<GinibreGaussianKernel>(&variant)) {
            const double d = (x - y) / g->scale;
            return std::exp(-0.5 * d * d) / M_PI;
        }
        if (const auto* s = std::get_if<SpectralExpansionKernel>(&variant)) {
            double k = 0.0;
            for (std::size_t n = 0; n < s->eigenvalues.size(); ++n)
                k += s->eigenvalues[n] * s->basis[n](x) * s->basis[n](y);
            return k;
        }
        return x == y ? 1.0 : 0.0;
    }

    double diagonal(double x) const {
        if (std::holds_alternative<GinibreGaussianKernel>(variant)) return 1.0 / M_PI;
        if (std::holds_alternative<PoissonIdentityKernel>(variant)) return 1.0;
        return value(x, x);
    }

    bool is_stationary() const {
        return !std::holds_alternative<SpectralExpansionKernel>(variant);
    }

    void validate(double window_end) const {
        if (const auto* s = std::get_if<SpectralExpansionKernel>(&variant)) {
            require(s->eigenvalues.size() == s->basis.size(), ErrorCode::invalid_argument,
                    "spectral kernel: eigenvalue/basis count mismatch");
            for (double ev : s->eigenvalues)
                require(ev >= 0.0 && ev <= 1.0, ErrorCode::eigen_out_of_range,
                        "spectral kernel eigenvalue outside [0,1]");
        }
        if (const auto* g = std::get_if<GinibreGaussianKernel>(&variant))
            require(g->scale > 0.0, ErrorCode::invalid_argument,
                    "Ginibre kernel scale must be > 0");
        const double trace = integrate(
            [&](double x) { return diagonal(x) * density(x); }, 0.0, window_end,
            1e-9, 1e-9);
        require(std::isfinite(trace), ErrorCode::invalid_argument,
                "int K(x,x) Lambda(dx) not finite on window");
    }
};

// rho_n(x_1..x_n) = det(K(x_i, x_j)).
inline double joint_intensity(const KernelSpec& kernel, std::span<const double> points) {
    require(!points.empty(), ErrorCode::invalid_argument,
            "joint_intensity needs at least one point");
    const int n = static_cast<int>(points.size());
    if (n == 1) return kernel.diagonal(points[0]);
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            m(i, j) = i == j ? kernel.diagonal(points[i])
                             : kernel.value(points[i], points[j]);
    return m.determinant();
}

// Discrete spectral data of the kernel's integral operator on a window:
// eigenvalues plus eigenfunctions evaluable at arbitrary points.  For a
// SpectralExpansionKernel this is the kernel's own data; for smooth kernels it
// comes from a symmetrised Nystrom discretisation W^{1/2} K W^{1/2} on
// Gauss-Legendre nodes.
class SpectralBasis {
public:
    int rank() const { return static_cast<int>(eigenvalues_.size()); }
    const std::vector<double>& eigenvalues() const { return eigenvalues_; }

    double eigenfunction(int n, double x) const {
        if (direct_) return direct_basis_[n](x);
        double acc = 0.0;
        for (std::size_t j = 0; j < nodes_.size(); ++j)
            acc += extension_(j, n) * kernel_.value(x, nodes_[j]);
        return acc;
    }

    static SpectralBasis from_spectral(const SpectralExpansionKernel& kernel) {
        SpectralBasis b;
        b.direct_ = true;
        b.eigenvalues_ = kernel.eigenvalues;
        b.direct_basis_ = kernel.basis;
        return b;
    }

    // Nystrom discretisation on [a, b].  Eigenvalues in (1, 1+1e-8] are
    // clipped to 1 (discretisation noise); anything larger means the kernel is
    // inadmissible on the window.
    static SpectralBasis nystrom(const KernelSpec& kernel, double a, double b,
                                 int n_quad) {
        require(!kernel.is_poisson(), ErrorCode::invalid_argument,
                "identity kernel has no Nystrom discretisation");
        SpectralBasis basis;
        basis.kernel_ = kernel;
        const auto nodes = gauss_legendre(n_quad, a, b);
        std::vector<double> sqrt_w(n_quad);
        basis.nodes_.resize(n_quad);
        for (int j = 0; j < n_quad; ++j) {
            basis.nodes_[j] = nodes[j].x;
            const double wl = nodes[j].w * kernel.density(nodes[j].x);
            sqrt_w[j] = std::sqrt(std::max(0.0, wl));
        }
        Eigen::MatrixXd m(n_quad, n_quad);
        for (int i = 0; i < n_quad; ++i)
            for (int j = 0; j < n_quad; ++j)
                m(i, j) = sqrt_w[i] * kernel.value(basis.nodes_[i], basis.nodes_[j]) *
                          sqrt_w[j];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
        require(solver.info() == Eigen::Success, ErrorCode::eigen_out_of_range,
                "Nystrom eigendecomposition failed");

        // Keep eigenvalues above the Bernoulli-relevance floor, largest first.
        const auto& raw = solver.eigenvalues();
        const auto& vecs = solver.eigenvectors();
        std::vector<int> keep;
        for (int n = n_quad - 1; n >= 0; --n) {
            double ev = raw[n];
            require(ev <= 1.0 + 1e-8, ErrorCode::eigen_out_of_range,
                    "Nystrom eigenvalue " + std::to_string(ev) + " above 1");
            require(ev >= -1e-8, ErrorCode::eigen_out_of_range,
                    "Nystrom eigenvalue " + std::to_string(ev) +
                        " below 0; kernel not nonnegative definite");
            if (ev > 1e-12) keep.push_back(n);
        }
        basis.eigenvalues_.reserve(keep.size());
        basis.extension_.resize(n_quad, static_cast<int>(keep.size()));
        int col = 0;
        for (int n : keep) {
            const double ev = std::min(raw[n], 1.0);
            basis.eigenvalues_.push_back(ev);
            // Nystrom extension: phi(x) = ev^{-1} sum_j sqrt(w_j l_j) K(x, x_j) e_j.
            for (int j = 0; j < n_quad; ++j)
                basis.extension_(j, col) = sqrt_w[j] * vecs(j, n) / ev;
            ++col;
        }
        return basis;
    }

private:
    bool direct_ = false;
    std::vector<double> eigenvalues_;
    std::vector<std::function<double(double)>> direct_basis_;
    KernelSpec kernel_;
    std::vector<double> nodes_;
    Eigen::MatrixXd extension_;
};

// Spectral data of a kernel on [0, window_end], dispatching on the variant.
inline SpectralBasis spectral_basis(const KernelSpec& kernel, double window_end,
                                    int n_quad = 200) {
    if (const auto* s = std::get_if<SpectralExpansionKernel>(&kernel.variant))
        return SpectralBasis::from_spectral(*s);
    return SpectralBasis::nystrom(kernel, 0.0, window_end, n_quad);
}

} // namespace brimm
