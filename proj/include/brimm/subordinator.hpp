#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "brimm/errors.hpp"
#include "brimm/rng.hpp"

namespace brimm {

// Standard positive beta-stable variate with Laplace transform exp(-s^beta),
// Kanter's representation:
//   S = sin(beta pi U) / sin(pi U)^{1/beta} * (sin((1-beta) pi U) / E)^{(1-beta)/beta}.
inline double sample_stable_positive(double beta, RngStream& rng) {
    require(beta > 0.0 && beta < 1.0, ErrorCode::invalid_argument,
            "stable order must be in (0,1)");
    const double u = rng.uniform_pos();
    const double e = -std::log(rng.uniform_pos());
    const double pu = M_PI * u;
    const double a = std::sin(beta * pu) / std::pow(std::sin(pu), 1.0 / beta);
    const double b = std::pow(std::sin((1.0 - beta) * pu) / e, (1.0 - beta) / beta);
    return a * b;
}

// Grid path of the inverse Y_beta(t) = inf{ s : S(s) > t } of a beta-stable
// subordinator, simulated by stable increments on an operational-time grid of
// step h.  Y is approximated by counting grid crossings, so it carries mass h
// at every level S(kh); this makes Stieltjes integrals against dY plain sums.
class InverseSubordinatorPath {
public:
    InverseSubordinatorPath(double beta, double step, std::vector<double> levels,
                            double horizon)
        : beta_(beta), step_(step), levels_(std::move(levels)), horizon_(horizon) {}

    double order() const { return beta_; }
    double step() const { return step_; }
    double horizon() const { return horizon_; }
    const std::vector<double>& levels() const { return levels_; }

    // Y(t) for t in [0, horizon]; nondecreasing, Y(0) = 0.
    double value(double t) const {
        require(t >= 0.0 && t <= horizon_ * (1.0 + 1e-12), ErrorCode::invalid_argument,
                "inverse subordinator evaluated outside [0, horizon]");
        const auto it = std::upper_bound(levels_.begin(), levels_.end(), t);
        return step_ * static_cast<double>(it - levels_.begin());
    }

    // int g(t) dY(t) over (0, horizon] as the grid sum h * sum_k g(S(kh)).
    template <typename F>
    double integrate(F&& g) const {
        double acc = 0.0;
        for (double level : levels_) {
            if (level > horizon_) break;
            acc += g(level);
        }
        return step_ * acc;
    }

private:
    double beta_;
    double step_;
    std::vector<double> levels_;  // S(h), S(2h), ... first value beyond horizon kept
    double horizon_;
};

inline InverseSubordinatorPath sample_inverse_subordinator(double beta, double horizon,
                                                           double step, RngStream& rng) {
    require(beta > 0.0 && beta < 1.0, ErrorCode::invalid_argument,
            "inverse subordinator order must be in (0,1)");
    require(horizon > 0.0 && step > 0.0, ErrorCode::invalid_argument,
            "horizon and grid step must be > 0");
    // The path crosses the horizon after Y(T)/h steps on average, i.e.
    // T^beta / (Gamma(1+beta) h).  Heavy-tailed increments make the realised
    // crossing step random, so the coarseness guard is on the expectation.
    const double expected_crossing =
        std::pow(horizon, beta) / (std::tgamma(1.0 + beta) * step);
    require(expected_crossing >= 10.0, ErrorCode::grid_too_coarse,
            "grid overshoots the horizon in fewer than 10 steps on average");
    std::vector<double> levels;
    const double increment_scale = std::pow(step, 1.0 / beta);
    double s = 0.0;
    while (s <= horizon) {
        s += increment_scale * sample_stable_positive(beta, rng);
        levels.push_back(s);
        require(levels.size() < 100'000'000, ErrorCode::grid_too_coarse,
                "subordinator path did not cross the horizon");
    }
    return InverseSubordinatorPath(beta, step, std::move(levels), horizon);
}

inline double default_subordinator_step(double horizon) { return horizon / 1e4; }

} // namespace brimm
