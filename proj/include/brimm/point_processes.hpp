#pragma once

#include <algorithm>
#include <cmath>
#include <variant>
#include <vector>

#include "brimm/errors.hpp"
#include "brimm/intensity.hpp"
#include "brimm/kernels.hpp"
#include "brimm/point_pattern.hpp"
#include "brimm/rng.hpp"

namespace brimm {

// ---------------------------------------------------------------------------
// Poisson
// ---------------------------------------------------------------------------

inline PointPattern sample_poisson_homogeneous(double rate, double window_end,
                                               RngStream& rng) {
    require(rate >= 0.0 && window_end >= 0.0, ErrorCode::invalid_argument,
            "Poisson sampler parameters out of range");
    PointPattern pattern;
    pattern.window_end = window_end;
    if (rate == 0.0 || window_end == 0.0) return pattern;
    double t = rng.exponential(rate);
    while (t <= window_end) {
        pattern.times.push_back(t);
        t += rng.exponential(rate);
    }
    return pattern;
}

// Inhomogeneous case by thinning against the envelope bound sup lambda.
inline PointPattern sample_poisson(const IntensityDensity& density, double window_end,
                                   RngStream& rng) {
    const double envelope = density.envelope(window_end);
    require(envelope >= 0.0 && std::isfinite(envelope), ErrorCode::bad_envelope,
            "thinning envelope not finite");
    PointPattern pattern;
    pattern.window_end = window_end;
    if (envelope == 0.0) return pattern;
    double t = rng.exponential(envelope);
    while (t <= window_end) {
        const double lx = density(t);
        require(lx <= envelope * (1.0 + 1e-9), ErrorCode::bad_envelope,
                "density exceeds its declared envelope");
        if (rng.uniform() * envelope < lx) pattern.times.push_back(t);
        t += rng.exponential(envelope);
    }
    return pattern;
}

// ---------------------------------------------------------------------------
// Cox (doubly stochastic Poisson)
// ---------------------------------------------------------------------------

// eta = R * Lebesgue with R ~ Gamma(shape, rate).
struct GammaMixedRate {
    double shape = 1.0;
    double rate = 1.0;
};

// eta(dx) = sum_{shots a_j <= x} exp(-decay (x - a_j)) dx, shots homogeneous
// Poisson(arrival_rate) on the window.
struct ShotNoise {
    double arrival_rate = 1.0;
    double mark_decay = 1.0;
};

using CoxDirecting = std::variant<GammaMixedRate, ShotNoise>;

struct CoxRealisation {
    // Directing density x -> eta'(x) on the window plus its sup bound.
    IntensityDensity directing;
    // Discontinuity locations of the density (shot arrivals), ascending.
    std::vector<double> breakpoints;
};

inline CoxRealisation sample_cox_directing(const CoxDirecting& spec, double window_end,
                                           RngStream& rng) {
    CoxRealisation real;
    if (const auto* g = std::get_if<GammaMixedRate>(&spec)) {
        require(g->shape > 0.0 && g->rate > 0.0, ErrorCode::invalid_argument,
                "Gamma directing parameters must be > 0");
        real.directing = IntensityDensity::constant(rng.gamma(g->shape, g->rate));
        return real;
    }
    const auto& s = std::get<ShotNoise>(spec);
    require(s.arrival_rate > 0.0 && s.mark_decay > 0.0, ErrorCode::invalid_argument,
            "shot-noise parameters must be > 0");
    const PointPattern shots = sample_poisson_homogeneous(s.arrival_rate, window_end, rng);
    const double decay = s.mark_decay;
    const std::vector<double> arrivals = shots.times;
    auto fn = [arrivals, decay](double x) {
        double v = 0.0;
        for (double a : arrivals) {
            if (a > x) break;
            v += std::exp(-decay * (x - a));
        }
        return v;
    };
    // Each shot contributes at most 1.
    const double bound = static_cast<double>(arrivals.size());
    real.directing = IntensityDensity::custom(
        fn, [bound](double) { return bound; }, "shot-noise");
    real.breakpoints = arrivals;
    return real;
}

inline PointPattern sample_cox(const CoxDirecting& spec, double window_end,
                               RngStream& rng) {
    const CoxRealisation real = sample_cox_directing(spec, window_end, rng);
    return sample_poisson(real.directing, window_end, rng);
}

// ---------------------------------------------------------------------------
// Fractional Poisson
// ---------------------------------------------------------------------------

// One Mittag-Leffler interarrival with survival E_beta(-lambda t^beta), via the
// exact rejection-free two-uniform representation (Kozubowski-Rachev)
//   T = -ln(U) lambda^{-1/beta} (sin(beta pi)/tan(beta pi V) - cos(beta pi))^{1/beta}.
// For beta = 1 this collapses to Exp(lambda).
inline double sample_mittag_leffler(double beta, double lambda, RngStream& rng) {
    require(beta > 0.0 && beta <= 1.0, ErrorCode::invalid_argument,
            "Mittag-Leffler order must be in (0,1]");
    require(lambda > 0.0, ErrorCode::invalid_argument, "rate must be > 0");
    const double e = -std::log(rng.uniform_pos());
    if (beta == 1.0) return e / lambda;
    const double v = rng.uniform_pos();
    const double bp = beta * M_PI;
    const double stable_factor = std::sin(bp) / std::tan(bp * v) - std::cos(bp);
    return e * std::pow(stable_factor / lambda, 1.0 / beta);
}

// Renewal construction: partial sums of iid Mittag-Leffler interarrivals.
inline PointPattern sample_fpp(double beta, double lambda, double window_end,
                               RngStream& rng) {
    PointPattern pattern;
    pattern.window_end = window_end;
    double t = sample_mittag_leffler(beta, lambda, rng);
    while (t <= window_end) {
        pattern.times.push_back(t);
        t += sample_mittag_leffler(beta, lambda, rng);
    }
    return pattern;
}

// ---------------------------------------------------------------------------
// Immigration mechanism: which point process spans the arrival epochs.
// ---------------------------------------------------------------------------

struct HomogeneousPoissonImmigration {
    double rate = 1.0;
};
struct InhomogeneousPoissonImmigration {
    IntensityDensity density;
};
struct CoxImmigration {
    CoxDirecting directing;
};
struct FppImmigration {
    double order = 1.0;  // beta in (0,1]
    double rate = 1.0;
};
struct DppImmigration {
    KernelSpec kernel;
};

using ImmigrationSpec =
    std::variant<HomogeneousPoissonImmigration, InhomogeneousPoissonImmigration,
                 CoxImmigration, FppImmigration, DppImmigration>;

inline void validate_immigration(const ImmigrationSpec& spec, double window_end) {
    if (const auto* h = std::get_if<HomogeneousPoissonImmigration>(&spec))
        require(h->rate > 0.0, ErrorCode::invalid_argument, "Poisson rate must be > 0");
    if (const auto* f = std::get_if<FppImmigration>(&spec)) {
        require(f->order > 0.0 && f->order <= 1.0, ErrorCode::invalid_argument,
                "FPP order must be in (0,1]");
        require(f->rate > 0.0, ErrorCode::invalid_argument, "FPP rate must be > 0");
    }
    if (const auto* d = std::get_if<DppImmigration>(&spec))
        d->kernel.validate(window_end);
}

// Mean density x -> E[Phi(dx)]/dx of the immigration process, where available
// in closed form (all families except shot-noise Cox boundary effects are
// exact; shot noise returns its Campbell-formula mean).
inline double immigration_mean_density(const ImmigrationSpec& spec, double x) {
    if (const auto* h = std::get_if<HomogeneousPoissonImmigration>(&spec))
        return h->rate;
    if (const auto* i = std::get_if<InhomogeneousPoissonImmigration>(&spec))
        return i->density(x);
    if (const auto* c = std::get_if<CoxImmigration>(&spec)) {
        if (const auto* g = std::get_if<GammaMixedRate>(&c->directing))
            return g->shape / g->rate;
        const auto& s = std::get<ShotNoise>(c->directing);
        // Shots restricted to [0, x]: E eta'(x) = nu (1 - e^{-kappa x}) / kappa.
        return s.arrival_rate * (1.0 - std::exp(-s.mark_decay * x)) / s.mark_decay;
    }
    if (const auto* f = std::get_if<FppImmigration>(&spec)) {
        // E[N(t)] = rate t^beta / Gamma(1+beta) via the time change.
        if (x <= 0.0) return 0.0;
        return f->rate * f->order * std::pow(x, f->order - 1.0) /
               std::tgamma(1.0 + f->order);
    }
    if (const auto* d = std::get_if<DppImmigration>(&spec))
        return d->kernel.diagonal(x) * d->kernel.density(x);
    raise(ErrorCode::invalid_argument,
          "mean density unavailable for this immigration family");
}

} // namespace brimm
