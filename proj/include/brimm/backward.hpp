#pragma once

#include <cmath>
#include <vector>

#include "brimm/errors.hpp"
#include "brimm/model.hpp"

namespace brimm {

// Dense-output integrator for the backward system of the no-immigration
// process: with G^(k)(t,s) the generating function started from one particle
// of type k,
//   d/dt G^(k) = ( G_{nu_k}(G) - G^(k) ) / mu_k,   G^(k)(0) = s_k,
// and the immigrant-group transform is the composition G_I(G(t)).
// Laplace transforms use the same table through s -> exp(-s).
class TransformTable {
public:
    TransformTable(const BranchingSpec& spec, Vec argument, double t_max,
                   double step = 1e-3)
        : spec_(&spec), arg_(std::move(argument)) {
        const int d = spec.num_types();
        require(arg_.size() == d, ErrorCode::invalid_argument,
                "transform argument dimension mismatch");
        for (int k = 0; k < d; ++k)
            require(arg_[k] >= -1.0 && arg_[k] <= 1.0, ErrorCode::invalid_argument,
                    "pgf argument must satisfy |s_k| <= 1");
        double min_mu = spec.lifetimes[0];
        for (double mu : spec.lifetimes) min_mu = std::min(min_mu, mu);
        step_ = std::min(step, step * min_mu);
        t_max_ = std::max(t_max, step_);
        const auto n_steps = static_cast<std::size_t>(std::ceil(t_max_ / step_));
        step_ = t_max_ / static_cast<double>(n_steps);

        values_.reserve(n_steps + 1);
        Vec g = arg_;
        values_.push_back(g);
        for (std::size_t i = 0; i < n_steps; ++i) {
            const Vec k1 = rhs(g);
            const Vec k2 = rhs(g + 0.5 * step_ * k1);
            const Vec k3 = rhs(g + 0.5 * step_ * k2);
            const Vec k4 = rhs(g + step_ * k3);
            g += (step_ / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            g = g.cwiseMax(-1.0).cwiseMin(1.0);
            values_.push_back(g);
        }
    }

    double t_max() const { return t_max_; }
    const Vec& argument() const { return arg_; }

    // G^(k)(t, s) for all k; cubic Hermite between grid points using the exact
    // slopes from the ODE right-hand side.
    Vec per_type(double t) const {
        require(t >= 0.0 && t <= t_max_ * (1.0 + 1e-12), ErrorCode::invalid_argument,
                "transform queried outside [0, t_max]");
        if (t <= 0.0) return values_.front();
        const double pos = std::min(t / step_, static_cast<double>(values_.size() - 1));
        const auto i = static_cast<std::size_t>(pos);
        if (i + 1 >= values_.size()) return values_.back();
        const double theta = pos - static_cast<double>(i);
        const Vec& y0 = values_[i];
        const Vec& y1 = values_[i + 1];
        const Vec d0 = step_ * rhs(y0);
        const Vec d1 = step_ * rhs(y1);
        const double h00 = (1.0 + 2.0 * theta) * (1.0 - theta) * (1.0 - theta);
        const double h10 = theta * (1.0 - theta) * (1.0 - theta);
        const double h01 = theta * theta * (3.0 - 2.0 * theta);
        const double h11 = theta * theta * (theta - 1.0);
        return h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1;
    }

    // G_{Z_x}(t, s) = G_I(G^(1)(t,s), ..., G^(d)(t,s)).
    double composed(double t) const {
        return spec_->immigrant_law.generating(per_type(t));
    }

private:
    Vec rhs(const Vec& g) const {
        const int d = spec_->num_types();
        Vec out(d);
        for (int k = 0; k < d; ++k)
            out[k] = (spec_->offspring[k].generating(g) - g[k]) / spec_->lifetimes[k];
        return out;
    }

    const BranchingSpec* spec_;
    Vec arg_;
    double step_ = 1e-3;
    double t_max_ = 0.0;
    std::vector<Vec> values_;
};

// Table for the pgf G_{Z_x}(., s), |s_k| <= 1.
inline TransformTable pgf_table(const BranchingSpec& spec, const Vec& s, double t_max,
                                double step = 1e-3) {
    return TransformTable(spec, s, t_max, step);
}

// Table for the Laplace transform L_{Z_x}(., s) = G_{Z_x}(., e^{-s}), s >= 0.
inline TransformTable laplace_table(const BranchingSpec& spec, const Vec& s,
                                    double t_max, double step = 1e-3) {
    Vec arg(s.size());
    for (int k = 0; k < s.size(); ++k) {
        require(s[k] >= 0.0, ErrorCode::invalid_argument,
                "Laplace argument must be nonnegative");
        arg[k] = std::exp(-s[k]);
    }
    return TransformTable(spec, arg, t_max, step);
}

} // namespace brimm
