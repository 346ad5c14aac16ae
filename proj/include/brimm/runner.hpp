#pragma once

#include <chrono>
#include <sstream>
#include <string>
#include <vector>

#include "brimm/config.hpp"
#include "brimm/errors.hpp"
#include "brimm/experiments.hpp"
#include "brimm/io.hpp"
#include "brimm/moments.hpp"
#include "brimm/parallel.hpp"
#include "brimm/simulate.hpp"
#include "brimm/transforms.hpp"

namespace brimm {

inline const char* version_string() { return "0.1.0"; }

struct RunResult {
    int exit_code = 0;
    std::string summary;
    std::vector<OutputRecord> outputs;
};

namespace run_detail {

inline Json verdict_to_json(const ExperimentVerdict& verdict) {
    // runtime lives in the manifest's wall time: verdict files must be
    // byte-identical across reruns.
    Json j;
    j["id"] = verdict.id;
    j["statistic_name"] = verdict.statistic_name;
    j["statistic"] = verdict.statistic;
    j["threshold"] = verdict.threshold;
    j["pass"] = verdict.pass;
    j["n_rep"] = verdict.n_rep;
    j["seed"] = verdict.seed;
    Json details = Json::object();
    for (const auto& [key, value] : verdict.details) details[key] = value;
    j["details"] = details;
    j["notes"] = verdict.notes;
    return j;
}

inline KernelSpec kernel_for_moments(const ImmigrationSpec& imm) {
    if (const auto* d = std::get_if<DppImmigration>(&imm)) return d->kernel;
    if (const auto* h = std::get_if<HomogeneousPoissonImmigration>(&imm))
        return KernelSpec{PoissonIdentityKernel{}, IntensityDensity::constant(h->rate)};
    if (const auto* i = std::get_if<InhomogeneousPoissonImmigration>(&imm))
        return KernelSpec{PoissonIdentityKernel{}, i->density};
    raise(ErrorCode::config_error, "moments mode needs a Poisson or DPP family");
}

inline void run_simulate(const ExperimentConfig& config, OutputSink& sink,
                         RunResult& result) {
    const auto& run = config.run;
    const auto snapshots = cfg::number_list(run.at("snapshots"), "run.snapshots");
    const auto n_rep = static_cast<std::uint64_t>(run.at("n_rep").get<double>());
    SimulationOptions options;
    if (run.contains("founding_immigrant_at_zero"))
        options.founding_immigrant_at_zero =
            run.at("founding_immigrant_at_zero").get<bool>();
    if (run.contains("population_cap"))
        options.population_cap = run.at("population_cap").get<std::int64_t>();

    const int d = config.model.num_types();
    const PatternSampler sampler(config.immigration, snapshots.back());
    std::vector<std::vector<PopulationVector>> paths(n_rep);
    RngStream master(config.seed);
    for_each_replicate(n_rep, master, config.threads,
                       [&](std::uint64_t r, RngStream& rng) {
                           paths[r] = simulate_with_immigration(config.model, sampler,
                                                                snapshots, rng, options)
                                          .populations;
                       });

    std::ostringstream csv;
    csv << "replicate,snapshot_t,type,count\n";
    for (std::uint64_t r = 0; r < n_rep; ++r)
        for (std::size_t k = 0; k < snapshots.size(); ++k)
            for (int i = 0; i < d; ++i)
                csv << r << "," << format_double(snapshots[k]) << "," << i << ","
                    << paths[r][k].counts[i] << "\n";
    sink.write("paths.csv", csv.str());

    if (run.contains("emit_binary") && run.at("emit_binary").get<bool>()) {
        // Header: magic, version, d, n_replicates, n_snapshots, snapshot
        // times, then little-endian 64-bit counts [replicate][snapshot][type].
        std::string bin;
        bin.append("BRIMSIMB", 8);
        append_le<std::uint32_t>(bin, 1);
        append_le<std::uint32_t>(bin, static_cast<std::uint32_t>(d));
        append_le<std::uint64_t>(bin, n_rep);
        append_le<std::uint64_t>(bin, snapshots.size());
        for (double t : snapshots) append_le<double>(bin, t);
        for (std::uint64_t r = 0; r < n_rep; ++r)
            for (std::size_t k = 0; k < snapshots.size(); ++k)
                for (int i = 0; i < d; ++i)
                    append_le<std::int64_t>(bin, paths[r][k].counts[i]);
        sink.write("paths.bin", bin);
    }

    std::ostringstream note;
    note << "simulate: " << n_rep << " replicates, " << snapshots.size()
         << " snapshots, founding_immigrant_at_zero="
         << (options.founding(d) ? "true" : "false");
    result.summary = note.str();
}

inline void run_moments(const ExperimentConfig& config, OutputSink& sink,
                        RunResult& result) {
    const auto t_grid = cfg::number_list(config.run.at("t_grid"), "run.t_grid");
    const double rel_tol = config.run.contains("rel_tol")
                               ? config.run.at("rel_tol").get<double>()
                               : 1e-8;
    const KernelSpec kernel = kernel_for_moments(config.immigration);
    const int d = config.model.num_types();
    std::ostringstream csv;
    csv << "t,i,j,mean_i,cov_ij,quad_err\n";
    for (double t : t_grid) {
        const MomentReport report = moment_report(config.model, kernel, t, rel_tol);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                csv << format_double(t) << "," << i << "," << j << ","
                    << format_double(report.mean[i]) << ","
                    << format_double(report.covariance(i, j)) << ","
                    << format_double(std::max(report.mean_quad_error[i],
                                              report.cov_quad_error(i, j)))
                    << "\n";
    }
    sink.write("moments.csv", csv.str());
    result.summary = "moments: " + std::to_string(t_grid.size()) + " grid points";
}

inline void run_transform(const ExperimentConfig& config, OutputSink& sink,
                          RunResult& result) {
    const auto t_grid = cfg::number_list(config.run.at("t_grid"), "run.t_grid");
    const auto s_grid = cfg::number_list(config.run.at("s_grid"), "run.s_grid");
    const TransformMode mode = config.run.at("mode").get<std::string>() == "pgf"
                                   ? TransformMode::pgf
                                   : TransformMode::laplace;
    TransformOptions options;
    if (config.run.contains("n_rep"))
        options.n_rep = static_cast<int>(config.run.at("n_rep").get<double>());
    const int d = config.model.num_types();
    RngStream rng(config.seed);
    std::ostringstream csv;
    csv << "t,s,value,std_error,method\n";
    for (double t : t_grid)
        for (double s : s_grid) {
            const Vec sv = Vec::Constant(d, s);
            const auto value = process_transform(config.model, config.immigration, t,
                                                 sv, mode, rng, options);
            csv << format_double(t) << "," << format_double(s) << ","
                << format_double(value.value) << "," << format_double(value.std_error)
                << "," << value.method << "\n";
        }
    sink.write("transform.csv", csv.str());
    result.summary = "transform: " + std::to_string(t_grid.size() * s_grid.size()) +
                     " evaluations";
}

// The moments benchmark as a checkable experiment: quadrature mean/variance
// against Monte Carlo at the final grid time.
inline ExperimentVerdict moments_consistency_experiment(const ExperimentConfig& config,
                                                        double t,
                                                        std::uint64_t n_rep) {
    detail::Stopwatch clock;
    ExperimentVerdict verdict;
    verdict.id = "moments-consistency";
    verdict.statistic_name = "max sigma distance";
    verdict.threshold = 4.0;
    verdict.n_rep = n_rep;
    verdict.seed = config.seed;
    verdict.threads = config.threads;

    const KernelSpec kernel = kernel_for_moments(config.immigration);
    const Vec mean = mean_with_immigration(config.model, kernel, t, 1e-8);
    const Mat cov = covariance_with_immigration(config.model, kernel, t, 1e-8);

    const double snaps[1] = {t};
    SimulationOptions options;
    options.founding_immigrant_at_zero = false;  // Theorem-form superposition
    const auto batch = detail::simulate_batch(config.model, config.immigration, snaps,
                                              n_rep, config.seed, config.threads,
                                              options);
    MeanAccumulator acc;
    for (const auto& path : batch)
        acc.add(static_cast<double>(path[0].counts[0]));
    const double mean_gap = acc.estimate().sigma_distance(mean[0]);

    MeanAccumulator fourth;
    const double mean_hat = acc.mean();
    for (const auto& path : batch) {
        const double c = static_cast<double>(path[0].counts[0]) - mean_hat;
        fourth.add(c * c * c * c);
    }
    const double var_se = std::sqrt(
        std::max(fourth.mean() - acc.variance() * acc.variance(), 0.0) /
        static_cast<double>(n_rep));
    const double var_gap = std::abs(acc.variance() - cov(0, 0)) / (var_se + 1e-12);

    verdict.details.emplace_back("quadrature_mean", mean[0]);
    verdict.details.emplace_back("mc_mean", acc.mean());
    verdict.details.emplace_back("mean_gap_sigma", mean_gap);
    verdict.details.emplace_back("quadrature_var", cov(0, 0));
    verdict.details.emplace_back("mc_var", acc.variance());
    verdict.details.emplace_back("var_gap_sigma", var_gap);
    verdict.statistic = std::max(mean_gap, var_gap);
    verdict.pass = mean_gap < 3.0 && var_gap < 4.0;
    verdict.runtime_seconds = clock.seconds();
    return verdict;
}

inline ExperimentVerdict convolution_experiment(const ExperimentConfig& config) {
    detail::Stopwatch clock;
    ExperimentVerdict verdict;
    verdict.id = "convolution-asymptotics";
    verdict.statistic_name = "max |ratio - 1| at horizon";
    verdict.threshold = 0.01;
    verdict.seed = config.seed;
    verdict.threads = config.threads;

    ConvInputs pure_exponential;
    pure_exponential.alpha = [](double x) { return std::exp(0.3 * x); };
    pure_exponential.beta = [](double x) { return std::exp(-0.2 * x); };
    pure_exponential.delta = 0.3;
    const double grid_a[3] = {10.0, 25.0, 40.0};
    const auto diag_a =
        conv_asymptote(pure_exponential, ConvRegime::exponential_growth, grid_a);

    ConvInputs polynomial_tail;
    polynomial_tail.alpha = [](double x) { return std::exp(0.3 * x); };
    polynomial_tail.beta = [](double x) { return x * std::exp(-0.1 * x); };
    polynomial_tail.delta = 0.3;
    const double grid_b[3] = {20.0, 40.0, 60.0};
    const auto diag_b =
        conv_asymptote(polynomial_tail, ConvRegime::exponential_growth, grid_b);

    const double gap_a = std::abs(diag_a.back().ratio - 1.0);
    const double gap_b = std::abs(diag_b.back().ratio - 1.0);
    verdict.details.emplace_back("exponential_ratio_gap", gap_a);
    verdict.details.emplace_back("polynomial_ratio_gap", gap_b);
    verdict.statistic = std::max(gap_a, gap_b);
    verdict.pass = verdict.statistic < verdict.threshold;
    verdict.runtime_seconds = clock.seconds();
    return verdict;
}

inline void run_experiment(const ExperimentConfig& config, OutputSink& sink,
                           RunResult& result) {
    const std::string name = config.run.at("name").get<std::string>();
    const auto gen = build_generator(config.model);
    ExperimentVerdict verdict;
    const bool dump = config.run.contains("dump_samples") &&
                      config.run.at("dump_samples").get<bool>();
    std::vector<double> samples;

    auto run_num = [&](const char* key, double fallback) {
        return config.run.contains(key) ? config.run.at(key).get<double>() : fallback;
    };

    if (name == "gamma-critical") {
        GammaLimitOptions opts;
        opts.t = run_num("t", opts.t);
        opts.n_rep = static_cast<std::uint64_t>(run_num("n_rep", 2000));
        opts.lambda_inf = run_num("lambda_inf", 1.0);
        opts.seed = config.seed;
        opts.threads = config.threads;
        verdict = experiment_gamma_limit(config.model, gen, config.immigration, opts,
                                         dump ? &samples : nullptr);
    } else if (name == "subcritical-stationary") {
        SubcriticalLimitOptions opts;
        opts.t_early = run_num("t_early", opts.t_early);
        opts.t_late = run_num("t_late", opts.t_late);
        opts.n_rep = static_cast<std::uint64_t>(run_num("n_rep", 5000));
        opts.lambda_inf = run_num("lambda_inf", 1.0);
        if (config.run.contains("s_grid"))
            opts.s_grid = cfg::number_list(config.run.at("s_grid"), "run.s_grid");
        opts.seed = config.seed;
        opts.threads = config.threads;
        verdict = experiment_subcritical_limit(config.model, gen,
                                               kernel_for_moments(config.immigration),
                                               opts, dump ? &samples : nullptr);
    } else if (name == "rescaled-supercritical") {
        RescaledLimitOptions opts;
        if (config.run.contains("t_grid"))
            opts.t_grid = cfg::number_list(config.run.at("t_grid"), "run.t_grid");
        if (config.run.contains("s_grid"))
            opts.s_grid = cfg::number_list(config.run.at("s_grid"), "run.s_grid");
        opts.n_rep = static_cast<std::uint64_t>(run_num("n_rep", 4000));
        opts.seed = config.seed;
        opts.threads = config.threads;
        verdict = experiment_rescaled_limit(config.model, gen, config.immigration, opts);
    } else if (name == "l2-delta-dominant" || name == "l2-delta-equals-rho") {
        L2RatesOptions opts;
        opts.lambda_inf = run_num("lambda_inf", 1.0);
        opts.delta = run_num("delta", name == "l2-delta-dominant" ? 0.2 : gen.rho);
        if (config.run.contains("t_grid"))
            opts.t_grid = cfg::number_list(config.run.at("t_grid"), "run.t_grid");
        opts.n_rep = static_cast<std::uint64_t>(run_num("n_rep", 2000));
        opts.seed = config.seed;
        opts.threads = config.threads;
        verdict = experiment_l2_rates(config.model, gen,
                                      name == "l2-delta-dominant"
                                          ? L2Regime::delta_dominant
                                          : L2Regime::delta_equals_rho_super,
                                      opts);
    } else if (name == "moments-subcritical") {
        verdict = moments_consistency_experiment(
            config, run_num("t", 6.0),
            static_cast<std::uint64_t>(run_num("n_rep", 100000)));
    } else if (name == "convolution-asymptotics") {
        verdict = convolution_experiment(config);
    } else {
        raise(ErrorCode::config_error, "unknown experiment '" + name + "'");
    }

    if (dump && !samples.empty()) {
        std::ostringstream csv;
        csv << "sample\n";
        for (double x : samples) csv << format_double(x) << "\n";
        sink.write("samples.csv", csv.str());
    }
    sink.write("verdict.json", verdict_to_json(verdict).dump(2) + "\n");
    std::ostringstream text;
    text << (verdict.pass ? "PASS" : "FAIL") << " " << verdict.id << ": "
         << verdict.statistic_name << " = " << format_double(verdict.statistic)
         << " (threshold " << format_double(verdict.threshold) << ", n_rep "
         << verdict.n_rep << ", seed " << verdict.seed << ")\n";
    for (const auto& [key, value] : verdict.details)
        text << "  " << key << " = " << format_double(value) << "\n";
    for (const auto& note : verdict.notes) text << "  note: " << note << "\n";
    sink.write("verdict.txt", text.str());
    result.summary = (verdict.pass ? "PASS " : "FAIL ") + verdict.id;
    result.exit_code = verdict.pass ? 0 : 2;
}

} // namespace run_detail

// Executes a validated config: computations, output files, and the manifest.
// Exit codes: 0 success/pass, 2 statistical verdict failure (errors throw).
inline RunResult run_config(const ExperimentConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    RunResult result;
    OutputSink sink{config.output_dir};
    if (config.kind == "simulate")
        run_detail::run_simulate(config, sink, result);
    else if (config.kind == "moments")
        run_detail::run_moments(config, sink, result);
    else if (config.kind == "transform")
        run_detail::run_transform(config, sink, result);
    else
        run_detail::run_experiment(config, sink, result);

    Json manifest;
    manifest["config_hash"] = hex64(fnv1a64(config.raw.dump()));
    manifest["seed"] = config.seed;
    manifest["threads"] = config.threads;
    manifest["version"] = version_string();
    manifest["wall_time_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    Json outputs = Json::array();
    for (const auto& record : sink.records()) {
        Json entry;
        entry["path"] = record.path;
        entry["bytes"] = record.bytes;
        entry["fnv64"] = record.fnv64;
        outputs.push_back(entry);
    }
    manifest["outputs"] = outputs;
    {
        std::ofstream out(std::filesystem::path(config.output_dir) /
                          "run_manifest.json");
        out << manifest.dump(2) << "\n";
    }
    result.outputs = sink.records();
    return result;
}

// ---------------------------------------------------------------------------
// Built-in preset configurations (full config documents).
// ---------------------------------------------------------------------------

inline std::string preset_config_text(const std::string& name) {
    const std::string critical_model = R"({
    "lifetimes": [1.0],
    "offspring": [[[[0], 0.5], [[2], 0.5]]],
    "immigrant_law": [[[1], 1.0]]
  })";
    const std::string subcritical_model = R"({
    "lifetimes": [1.0],
    "offspring": [[[[0], 0.75], [[2], 0.25]]],
    "immigrant_law": [[[1], 1.0]]
  })";
    const std::string supercritical_model = R"({
    "lifetimes": [1.0],
    "offspring": [[[[0], 0.25], [[2], 0.75]]],
    "immigrant_law": [[[1], 1.0]]
  })";
    const std::string resonance_model = R"({
    "lifetimes": [1.0],
    "offspring": [[[[0], 0.35], [[2], 0.65]]],
    "immigrant_law": [[[1], 1.0]]
  })";
    const std::string poisson_imm = R"({ "family": "poisson", "rate": 1.0 })";

    if (name == "gamma-critical")
        return "{\n  \"model\": " + critical_model + ",\n  \"immigration\": " +
               poisson_imm +
               ",\n  \"run\": { \"kind\": \"experiment\", \"name\": \"gamma-critical\", "
               "\"t\": 300.0, \"n_rep\": 2000 },\n  \"seed\": 20240003\n}\n";
    if (name == "subcritical-stationary")
        return "{\n  \"model\": " + subcritical_model + ",\n  \"immigration\": " +
               poisson_imm +
               ",\n  \"run\": { \"kind\": \"experiment\", \"name\": "
               "\"subcritical-stationary\", \"t_early\": 40.0, \"t_late\": 80.0, "
               "\"n_rep\": 5000 },\n  \"seed\": 20240004\n}\n";
    if (name == "rescaled-supercritical")
        return "{\n  \"model\": " + supercritical_model + ",\n  \"immigration\": " +
               poisson_imm +
               ",\n  \"run\": { \"kind\": \"experiment\", \"name\": "
               "\"rescaled-supercritical\", \"n_rep\": 4000 },\n  \"seed\": 20240001\n}\n";
    if (name == "l2-delta-dominant")
        return "{\n  \"model\": " + subcritical_model +
               ",\n  \"immigration\": { \"family\": \"inhomogeneous_poisson\", "
               "\"density\": { \"type\": \"exponential\", \"scale\": 1.0, \"growth\": "
               "0.2 } },\n  \"run\": { \"kind\": \"experiment\", \"name\": "
               "\"l2-delta-dominant\", \"delta\": 0.2, \"t_grid\": [10.0, 15.0, 20.0, "
               "25.0], \"n_rep\": 2000 },\n  \"seed\": 20240002\n}\n";
    if (name == "l2-delta-equals-rho")
        return "{\n  \"model\": " + resonance_model +
               ",\n  \"immigration\": { \"family\": \"inhomogeneous_poisson\", "
               "\"density\": { \"type\": \"exponential\", \"scale\": 1.0, \"growth\": "
               "0.3 } },\n  \"run\": { \"kind\": \"experiment\", \"name\": "
               "\"l2-delta-equals-rho\", \"delta\": 0.3, \"t_grid\": [10.0, 15.0, "
               "20.0, 24.0], \"n_rep\": 2000 },\n  \"seed\": 20240002\n}\n";
    if (name == "moments-subcritical")
        return "{\n  \"model\": " + subcritical_model + ",\n  \"immigration\": " +
               poisson_imm +
               ",\n  \"run\": { \"kind\": \"experiment\", \"name\": "
               "\"moments-subcritical\", \"t\": 6.0, \"n_rep\": 100000 },\n  \"seed\": "
               "20240005\n}\n";
    if (name == "convolution-asymptotics")
        return "{\n  \"model\": " + critical_model + ",\n  \"immigration\": " +
               poisson_imm +
               ",\n  \"run\": { \"kind\": \"experiment\", \"name\": "
               "\"convolution-asymptotics\" },\n  \"seed\": 1\n}\n";
    raise(ErrorCode::config_error, "unknown preset '" + name + "'");
}

} // namespace brimm
