#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "brimm/backward.hpp"
#include "brimm/errors.hpp"
#include "brimm/estimate.hpp"
#include "brimm/laplace.hpp"
#include "brimm/model.hpp"
#include "brimm/point_processes.hpp"

namespace brimm {

enum class TransformMode { pgf, laplace };

struct TransformValue {
    double value = 1.0;
    double std_error = 0.0;  // zero for the deterministic families
    bool deterministic = true;
    std::string method;
};

struct TransformOptions {
    int n_rep = 20000;              // Cox / FPP Monte Carlo replicates
    int dpp_series_n_max = 12;
    double backward_step = 1e-3;
    double quad_abs_tol = 1e-10;
};

// E[s^{Z(t)}] (pgf mode) or E[e^{-<Z(t), s>}] (laplace mode) of the process
// with immigration, through L_Phi(f_t) with
//   f_t(x) = -ln G_{Z_x}(t - x, s) 1{x <= t}.
inline TransformValue process_transform(const BranchingSpec& spec,
                                        const ImmigrationSpec& imm, double t,
                                        const Vec& s, TransformMode mode,
                                        RngStream& rng,
                                        const TransformOptions& opts = {}) {
    spec.validate();
    TransformValue out;
    if (t <= 0.0) {
        out.method = "empty-window";
        return out;
    }
    const TransformTable table = mode == TransformMode::pgf
                                     ? pgf_table(spec, s, t, opts.backward_step)
                                     : laplace_table(spec, s, t, opts.backward_step);
    TestFunction f_t{[&table, t](double x) {
                         const double g = table.composed(t - x);
                         return g > 0.0 ? -std::log(g) : 700.0;
                     },
                     t};

    if (const auto* h = std::get_if<HomogeneousPoissonImmigration>(&imm)) {
        out.value = laplace_poisson(f_t, IntensityDensity::constant(h->rate),
                                    opts.quad_abs_tol);
        out.method = "poisson-quadrature";
        return out;
    }
    if (const auto* i = std::get_if<InhomogeneousPoissonImmigration>(&imm)) {
        out.value = laplace_poisson(f_t, i->density, opts.quad_abs_tol);
        out.method = "poisson-quadrature";
        return out;
    }
    if (const auto* d = std::get_if<DppImmigration>(&imm)) {
        const auto series = laplace_dpp_series(f_t, d->kernel, opts.dpp_series_n_max);
        out.value = series.value;
        out.std_error = series.tail_bound;
        out.method = "dpp-series";
        return out;
    }
    if (const auto* c = std::get_if<CoxImmigration>(&imm)) {
        const MCEstimate e = laplace_cox_mc(f_t, c->directing, opts.n_rep, rng);
        return {e.value, e.std_error, false, "cox-mc"};
    }
    const auto& f = std::get<FppImmigration>(imm);
    if (f.order >= 1.0) {
        out.value = laplace_poisson(f_t, IntensityDensity::constant(f.rate),
                                    opts.quad_abs_tol);
        out.method = "poisson-quadrature";
        return out;
    }
    const MCEstimate e = laplace_fpp_mc(f_t, f.order, f.rate, opts.n_rep, rng);
    return {e.value, e.std_error, false, "fpp-mc"};
}

// Plain Monte Carlo transform of observed population vectors.
inline MCEstimate empirical_transform(std::span<const std::vector<std::int64_t>> samples,
                                      const Vec& s, TransformMode mode) {
    require(!samples.empty(), ErrorCode::empty_sample,
            "empirical_transform needs at least one sample");
    MeanAccumulator acc;
    for (const auto& z : samples) {
        require(static_cast<int>(z.size()) == s.size(), ErrorCode::invalid_argument,
                "sample dimension mismatch");
        if (mode == TransformMode::pgf) {
            double prod = 1.0;
            for (int k = 0; k < s.size(); ++k)
                for (std::int64_t c = 0; c < z[k]; ++c) prod *= s[k];
            acc.add(prod);
        } else {
            double dot = 0.0;
            for (int k = 0; k < s.size(); ++k)
                dot += s[k] * static_cast<double>(z[k]);
            acc.add(std::exp(-dot));
        }
    }
    return acc.estimate();
}

} // namespace brimm
