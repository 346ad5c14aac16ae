#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "brimm/dpp_sampler.hpp"
#include "brimm/errors.hpp"
#include "brimm/model.hpp"
#include "brimm/point_pattern.hpp"
#include "brimm/point_processes.hpp"
#include "brimm/rng.hpp"

namespace brimm {

struct PopulationVector {
    std::vector<std::int64_t> counts;

    std::int64_t total() const {
        std::int64_t t = 0;
        for (std::int64_t c : counts) t += c;
        return t;
    }

    static PopulationVector zero(int d) {
        return {std::vector<std::int64_t>(static_cast<std::size_t>(d), 0)};
    }
};

struct SimulationOptions {
    std::int64_t population_cap = 10'000'000;
    // Founding immigrant group at T_0 = 0 in addition to the point-process
    // epochs; conventional for multitype models only, so the default follows
    // the type count.  Always reported in outputs.
    std::optional<bool> founding_immigrant_at_zero;

    bool founding(int d) const {
        return founding_immigrant_at_zero.value_or(d > 1);
    }
};

// Exact Gillespie walk of the no-immigration process from `state`, recording
// the population at each requested time (sorted ascending).  The state is
// advanced in place; rates are counts_i / mu_i, the dying particle is replaced
// by an offspring draw.
inline std::vector<PopulationVector> evolve_recording(
    const BranchingSpec& spec, PopulationVector& state,
    std::span<const double> record_times, RngStream& rng,
    std::int64_t population_cap = 10'000'000) {
    const int d = spec.num_types();
    std::vector<PopulationVector> out;
    out.reserve(record_times.size());
    double t = 0.0;
    std::size_t next_record = 0;
    std::vector<double> rates(static_cast<std::size_t>(d), 0.0);
    while (next_record < record_times.size()) {
        double total_rate = 0.0;
        for (int i = 0; i < d; ++i) {
            rates[i] = static_cast<double>(state.counts[i]) / spec.lifetimes[i];
            total_rate += rates[i];
        }
        if (total_rate == 0.0) {
            // Absorbed at zero: every later snapshot sees the same state.
            while (next_record < record_times.size()) {
                out.push_back(state);
                ++next_record;
            }
            break;
        }
        const double dt = rng.exponential(total_rate);
        while (next_record < record_times.size() &&
               t + dt > record_times[next_record]) {
            out.push_back(state);
            ++next_record;
        }
        if (next_record >= record_times.size()) break;
        t += dt;
        double pick = rng.uniform() * total_rate;
        int type = d - 1;
        for (int i = 0; i < d; ++i) {
            pick -= rates[i];
            if (pick <= 0.0) {
                type = i;
                break;
            }
        }
        state.counts[type] -= 1;
        const auto& offspring = spec.offspring[type].sample(rng);
        for (int i = 0; i < d; ++i) state.counts[i] += offspring[i];
        require(state.total() <= population_cap, ErrorCode::population_overflow,
                "population exceeded the configured cap");
    }
    return out;
}

enum class InitialCondition { immigrant_group, one_particle };

// Z_x(horizon): the process without immigration, started from one particle of
// `type_index` or from an immigrant-law draw.
inline PopulationVector simulate_no_immigration(const BranchingSpec& spec,
                                                InitialCondition init, double horizon,
                                                RngStream& rng, int type_index = 0,
                                                std::int64_t population_cap =
                                                    10'000'000) {
    const int d = spec.num_types();
    PopulationVector state = PopulationVector::zero(d);
    if (init == InitialCondition::one_particle) {
        require(type_index >= 0 && type_index < d, ErrorCode::invalid_argument,
                "type index out of range");
        state.counts[type_index] = 1;
    } else {
        const auto& group = spec.immigrant_law.sample(rng);
        for (int i = 0; i < d; ++i) state.counts[i] = group[i];
    }
    const double times[1] = {horizon};
    return evolve_recording(spec, state, times, rng, population_cap).front();
}

struct SimPath {
    std::vector<double> snapshot_times;
    std::vector<PopulationVector> populations;  // superposed, one per snapshot
    PointPattern immigration;
    std::uint64_t seed = 0;
    bool founding_immigrant = false;
};

// Z(t) = sum_{i: T_i <= t} Z_x^(i)(t - T_i): one immigration pattern, then an
// independent clan per epoch, each on its own substream keyed by the epoch
// index so that results do not depend on evaluation order.
inline SimPath simulate_with_immigration(const BranchingSpec& spec,
                                         const PatternSampler& immigration,
                                         std::span<const double> snapshots,
                                         RngStream& rng,
                                         const SimulationOptions& options = {}) {
    const int d = spec.num_types();
    SimPath path;
    path.seed = rng.key();
    path.founding_immigrant = options.founding(d);
    path.snapshot_times.assign(snapshots.begin(), snapshots.end());
    path.populations.assign(snapshots.size(), PopulationVector::zero(d));

    RngStream pattern_rng = rng.substream(0);
    path.immigration = immigration.sample(pattern_rng);

    std::vector<double> epochs;
    if (path.founding_immigrant) epochs.push_back(0.0);
    epochs.insert(epochs.end(), path.immigration.times.begin(),
                  path.immigration.times.end());

    std::vector<double> ages;
    for (std::size_t j = 0; j < epochs.size(); ++j) {
        RngStream clan_rng = rng.substream(j + 1);
        PopulationVector state = PopulationVector::zero(d);
        const auto& group = spec.immigrant_law.sample(clan_rng);
        for (int i = 0; i < d; ++i) state.counts[i] = group[i];

        ages.clear();
        std::size_t first_snapshot = 0;
        while (first_snapshot < snapshots.size() &&
               snapshots[first_snapshot] < epochs[j])
            ++first_snapshot;
        for (std::size_t k = first_snapshot; k < snapshots.size(); ++k)
            ages.push_back(snapshots[k] - epochs[j]);
        if (ages.empty()) continue;

        const auto clan = evolve_recording(spec, state, ages, clan_rng,
                                           options.population_cap);
        for (std::size_t k = 0; k < clan.size(); ++k)
            for (int i = 0; i < d; ++i)
                path.populations[first_snapshot + k].counts[i] += clan[k].counts[i];
    }
    return path;
}

} // namespace brimm
