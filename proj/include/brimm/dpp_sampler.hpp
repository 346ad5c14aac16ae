#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "brimm/errors.hpp"
#include "brimm/kernels.hpp"
#include "brimm/point_pattern.hpp"
#include "brimm/point_processes.hpp"
#include "brimm/rng.hpp"

namespace brimm {

// Sampler for a determinantal point process on [0, T] via the spectral
// (Hough-Krishnapur-Peres-Virag) algorithm: Bernoulli-thin the eigenfunctions
// by their eigenvalues, then draw the points of the resulting projection DPP
// sequentially from the chain-rule conditional densities.
//
// The one-dimensional conditional densities are sampled by inverse CDF on a
// fine midpoint grid; the count distribution is exact (it only depends on the
// Bernoulli draws), locations carry O(T/grid) discretisation error.
class DppModel {
public:
    DppModel(KernelSpec kernel, double window_end, int n_quad = 200, int grid_m = 4096)
        : kernel_(std::move(kernel)), window_end_(window_end) {
        kernel_.validate(window_end);
        if (kernel_.is_poisson()) return;
        basis_ = spectral_basis(kernel_, window_end, n_quad);
        const int r = basis_.rank();
        grid_x_.resize(grid_m);
        grid_w_.resize(grid_m);
        const double h = window_end / grid_m;
        phi_grid_.resize(r, grid_m);
        for (int c = 0; c < grid_m; ++c) {
            grid_x_[c] = (c + 0.5) * h;
            grid_w_[c] = kernel_.density(grid_x_[c]) * h;
            for (int n = 0; n < r; ++n)
                phi_grid_(n, c) = basis_.eigenfunction(n, grid_x_[c]);
        }
    }

    const KernelSpec& kernel() const { return kernel_; }
    double window_end() const { return window_end_; }
    const SpectralBasis& basis() const { return basis_; }

    PointPattern sample(RngStream& rng) const {
        if (kernel_.is_poisson())
            return sample_poisson(kernel_.density, window_end_, rng);

        // Select active eigenfunctions.
        std::vector<int> active;
        for (int n = 0; n < basis_.rank(); ++n)
            if (rng.bernoulli(basis_.eigenvalues()[n])) active.push_back(n);

        PointPattern pattern;
        pattern.window_end = window_end_;
        const int count = static_cast<int>(active.size());
        if (count == 0) return pattern;

        const int m = static_cast<int>(grid_x_.size());
        // Feature vectors on the grid for the active set.
        Eigen::MatrixXd v(count, m);
        for (int i = 0; i < count; ++i) v.row(i) = phi_grid_.row(active[i]);

        std::vector<Eigen::VectorXd> ortho;  // orthonormal directions consumed
        std::vector<double> density(m);
        for (int step = 0; step < count; ++step) {
            for (int c = 0; c < m; ++c) {
                double norm2 = v.col(c).squaredNorm();
                for (const auto& e : ortho) {
                    const double proj = e.dot(v.col(c));
                    norm2 -= proj * proj;
                }
                density[c] = std::max(0.0, norm2) * grid_w_[c];
            }
            const int cell = sample_cell(density, rng);
            const double h = window_end_ / m;
            const double x = grid_x_[cell] + (rng.uniform() - 0.5) * h;
            pattern.times.push_back(std::clamp(x, 1e-12, window_end_));

            // Orthonormalise the chosen point's feature vector against the
            // directions already removed.
            Eigen::VectorXd feat(count);
            for (int i = 0; i < count; ++i)
                feat[i] = basis_.eigenfunction(active[i], pattern.times.back());
            for (const auto& e : ortho) feat -= e.dot(feat) * e;
            const double norm = feat.norm();
            require(norm > 1e-12, ErrorCode::invalid_argument,
                    "degenerate projection step in DPP sampling");
            ortho.push_back(feat / norm);
        }
        std::sort(pattern.times.begin(), pattern.times.end());
        pattern.times.erase(std::unique(pattern.times.begin(), pattern.times.end()),
                            pattern.times.end());
        return pattern;
    }

private:
    static int sample_cell(const std::vector<double>& weights, RngStream& rng) {
        double total = 0.0;
        for (double w : weights) total += w;
        require(total > 0.0, ErrorCode::invalid_argument,
                "DPP conditional density vanished on the grid");
        double target = rng.uniform() * total;
        for (std::size_t c = 0; c < weights.size(); ++c) {
            target -= weights[c];
            if (target <= 0.0) return static_cast<int>(c);
        }
        return static_cast<int>(weights.size()) - 1;
    }

    KernelSpec kernel_;
    double window_end_;
    SpectralBasis basis_;
    std::vector<double> grid_x_;
    std::vector<double> grid_w_;
    Eigen::MatrixXd phi_grid_;
};

// One-shot convenience; prefer constructing DppModel once for replicated draws.
inline PointPattern sample_dpp(const KernelSpec& kernel, double window_end,
                               RngStream& rng, int n_quad = 200) {
    DppModel model(kernel, window_end, n_quad);
    return model.sample(rng);
}

// Dispatch a single immigration-pattern draw.  DPP callers that loop should
// hold a PatternSampler so the Nystrom step runs once.
class PatternSampler {
public:
    PatternSampler(ImmigrationSpec spec, double window_end)
        : spec_(std::move(spec)), window_end_(window_end) {
        validate_immigration(spec_, window_end);
        if (const auto* d = std::get_if<DppImmigration>(&spec_))
            dpp_.emplace(d->kernel, window_end);
    }

    const ImmigrationSpec& spec() const { return spec_; }
    double window_end() const { return window_end_; }

    PointPattern sample(RngStream& rng) const {
        if (const auto* h = std::get_if<HomogeneousPoissonImmigration>(&spec_))
            return sample_poisson_homogeneous(h->rate, window_end_, rng);
        if (const auto* i = std::get_if<InhomogeneousPoissonImmigration>(&spec_))
            return sample_poisson(i->density, window_end_, rng);
        if (const auto* c = std::get_if<CoxImmigration>(&spec_))
            return sample_cox(c->directing, window_end_, rng);
        if (const auto* f = std::get_if<FppImmigration>(&spec_))
            return sample_fpp(f->order, f->rate, window_end_, rng);
        return dpp_->sample(rng);
    }

private:
    ImmigrationSpec spec_;
    double window_end_;
    std::optional<DppModel> dpp_;
};

} // namespace brimm
