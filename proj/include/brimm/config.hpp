#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "brimm/errors.hpp"
#include "brimm/experiments.hpp"
#include "brimm/io.hpp"
#include "brimm/model.hpp"
#include "brimm/moments.hpp"
#include "brimm/point_processes.hpp"
#include "brimm/simulate.hpp"
#include "brimm/transforms.hpp"

namespace brimm {

using Json = nlohmann::json;

namespace cfg {

[[noreturn]] inline void fail(const std::string& path, const std::string& what) {
    raise(ErrorCode::config_error, path + ": " + what);
}

inline void reject_unknown(const Json& obj, const std::string& path,
                           const std::set<std::string>& allowed) {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key)) fail(path + "." + key, "unknown field");
}

inline const Json& field(const Json& obj, const std::string& path,
                         const std::string& key) {
    if (!obj.contains(key)) fail(path + "." + key, "missing required field");
    return obj.at(key);
}

inline double number(const Json& obj, const std::string& path, const std::string& key) {
    const Json& v = field(obj, path, key);
    if (!v.is_number()) fail(path + "." + key, "expected a number");
    return v.get<double>();
}

inline double number_or(const Json& obj, const std::string& path,
                        const std::string& key, double fallback) {
    if (!obj.contains(key)) return fallback;
    return number(obj, path, key);
}

inline std::string text(const Json& obj, const std::string& path,
                        const std::string& key) {
    const Json& v = field(obj, path, key);
    if (!v.is_string()) fail(path + "." + key, "expected a string");
    return v.get<std::string>();
}

inline std::vector<double> number_list(const Json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) fail(path, "expected a nonempty array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) fail(path, "expected numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

// Pmf atoms: [ [[counts...], probability], ... ].
inline Pmf parse_pmf(const Json& v, const std::string& path, int dim) {
    if (!v.is_array() || v.empty()) fail(path, "expected a nonempty atom list");
    std::vector<std::pair<std::vector<std::int64_t>, double>> atoms;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string apath = path + "[" + std::to_string(i) + "]";
        const Json& atom = v[i];
        if (!atom.is_array() || atom.size() != 2)
            fail(apath, "expected [counts, probability]");
        const Json& counts = atom[0];
        if (!counts.is_array() || static_cast<int>(counts.size()) != dim)
            fail(apath, "counts must have one entry per type");
        std::vector<std::int64_t> n;
        for (const auto& c : counts) {
            if (!c.is_number_integer() || c.get<std::int64_t>() < 0)
                fail(apath, "counts must be nonnegative integers");
            n.push_back(c.get<std::int64_t>());
        }
        if (!atom[1].is_number()) fail(apath, "probability must be a number");
        atoms.emplace_back(std::move(n), atom[1].get<double>());
    }
    try {
        return Pmf(dim, std::move(atoms));
    } catch (const Error& e) {
        fail(path, e.what());
    }
}

inline BranchingSpec parse_model(const Json& v, const std::string& path) {
    reject_unknown(v, path, {"lifetimes", "offspring", "immigrant_law"});
    BranchingSpec spec;
    spec.lifetimes = number_list(field(v, path, "lifetimes"), path + ".lifetimes");
    const int d = static_cast<int>(spec.lifetimes.size());
    const Json& off = field(v, path, "offspring");
    if (!off.is_array() || static_cast<int>(off.size()) != d)
        fail(path + ".offspring", "expected one offspring law per type");
    for (int i = 0; i < d; ++i)
        spec.offspring.push_back(
            parse_pmf(off[i], path + ".offspring[" + std::to_string(i) + "]", d));
    spec.immigrant_law =
        parse_pmf(field(v, path, "immigrant_law"), path + ".immigrant_law", d);
    try {
        spec.validate();
    } catch (const Error& e) {
        fail(path, e.what());
    }
    return spec;
}

inline IntensityDensity parse_density(const Json& v, const std::string& path) {
    reject_unknown(v, path, {"type", "value", "scale", "growth"});
    const std::string type = text(v, path, "type");
    if (type == "constant") return IntensityDensity::constant(number(v, path, "value"));
    if (type == "exponential")
        return IntensityDensity::exponential(number(v, path, "scale"),
                                             number(v, path, "growth"));
    fail(path + ".type", "unknown density type '" + type + "'");
}

// Orthonormal cosine basis on [0, T] in L^2(c dx).
inline std::vector<std::function<double(double)>> fourier_basis(int rank, double t_end,
                                                                double density_value) {
    std::vector<std::function<double(double)>> basis;
    const double mass = density_value * t_end;
    for (int n = 0; n < rank; ++n) {
        if (n == 0)
            basis.emplace_back([mass](double) { return 1.0 / std::sqrt(mass); });
        else
            basis.emplace_back([n, t_end, mass](double x) {
                return std::sqrt(2.0 / mass) * std::cos(n * M_PI * x / t_end);
            });
    }
    return basis;
}

inline KernelSpec parse_kernel(const Json& v, const std::string& path) {
    reject_unknown(v, path,
                   {"type", "scale", "eigenvalues", "basis", "domain_end", "density"});
    KernelSpec kernel;
    kernel.density = parse_density(field(v, path, "density"), path + ".density");
    const std::string type = text(v, path, "type");
    if (type == "poisson_identity") {
        kernel.variant = PoissonIdentityKernel{};
    } else if (type == "ginibre") {
        kernel.variant = GinibreGaussianKernel{number_or(v, path, "scale", 1.0)};
    } else if (type == "spectral") {
        SpectralExpansionKernel s;
        s.eigenvalues =
            number_list(field(v, path, "eigenvalues"), path + ".eigenvalues");
        const std::string basis = v.contains("basis") ? text(v, path, "basis") : "fourier";
        if (basis != "fourier") fail(path + ".basis", "unknown basis '" + basis + "'");
        const double t_end = number(v, path, "domain_end");
        if (t_end <= 0.0) fail(path + ".domain_end", "must be positive");
        s.basis = fourier_basis(static_cast<int>(s.eigenvalues.size()), t_end,
                                kernel.density(0.0));
        kernel.variant = std::move(s);
    } else {
        fail(path + ".type", "unknown kernel type '" + type + "'");
    }
    return kernel;
}

inline ImmigrationSpec parse_immigration(const Json& v, const std::string& path) {
    const std::string family = text(v, path, "family");
    if (family == "poisson") {
        reject_unknown(v, path, {"family", "rate"});
        return HomogeneousPoissonImmigration{number(v, path, "rate")};
    }
    if (family == "inhomogeneous_poisson") {
        reject_unknown(v, path, {"family", "density"});
        return InhomogeneousPoissonImmigration{
            parse_density(field(v, path, "density"), path + ".density")};
    }
    if (family == "cox_gamma") {
        reject_unknown(v, path, {"family", "shape", "rate"});
        return CoxImmigration{
            GammaMixedRate{number(v, path, "shape"), number(v, path, "rate")}};
    }
    if (family == "cox_shot_noise") {
        reject_unknown(v, path, {"family", "arrival_rate", "mark_decay"});
        return CoxImmigration{ShotNoise{number(v, path, "arrival_rate"),
                                        number(v, path, "mark_decay")}};
    }
    if (family == "fpp") {
        reject_unknown(v, path, {"family", "order", "rate"});
        return FppImmigration{number(v, path, "order"), number(v, path, "rate")};
    }
    if (family == "dpp") {
        reject_unknown(v, path, {"family", "kernel"});
        return DppImmigration{parse_kernel(field(v, path, "kernel"), path + ".kernel")};
    }
    fail(path + ".family", "unknown immigration family '" + family + "'");
}

} // namespace cfg

// Fully validated run description: every field checked before any computation.
struct ExperimentConfig {
    BranchingSpec model;
    ImmigrationSpec immigration;
    Json run;  // validated per kind
    std::string kind;
    std::uint64_t seed = 1;
    int threads = 1;
    std::string output_dir = "out";
    Json raw;
};

inline ExperimentConfig parse_config(const Json& root) {
    cfg::reject_unknown(root, "config",
                        {"model", "immigration", "run", "seed", "threads", "output"});
    ExperimentConfig config;
    config.raw = root;
    config.model = cfg::parse_model(cfg::field(root, "config", "model"), "config.model");
    config.immigration = cfg::parse_immigration(
        cfg::field(root, "config", "immigration"), "config.immigration");

    if (root.contains("seed")) {
        const Json& s = root.at("seed");
        if (!s.is_number_unsigned() && !s.is_number_integer())
            cfg::fail("config.seed", "expected an integer");
        config.seed = s.get<std::uint64_t>();
    }
    if (root.contains("threads")) {
        const Json& t = root.at("threads");
        if (!t.is_number_integer() || t.get<int>() < 1)
            cfg::fail("config.threads", "expected a positive integer");
        config.threads = t.get<int>();
    }
    if (root.contains("output")) {
        cfg::reject_unknown(root.at("output"), "config.output", {"dir"});
        config.output_dir = cfg::text(root.at("output"), "config.output", "dir");
    }

    const Json& run = cfg::field(root, "config", "run");
    config.kind = cfg::text(run, "config.run", "kind");
    if (config.kind == "simulate") {
        cfg::reject_unknown(run, "config.run",
                            {"kind", "snapshots", "n_rep", "founding_immigrant_at_zero",
                             "population_cap", "emit_binary"});
        cfg::number_list(cfg::field(run, "config.run", "snapshots"),
                         "config.run.snapshots");
        cfg::number(run, "config.run", "n_rep");
    } else if (config.kind == "moments") {
        cfg::reject_unknown(run, "config.run", {"kind", "t_grid", "rel_tol"});
        cfg::number_list(cfg::field(run, "config.run", "t_grid"), "config.run.t_grid");
        if (!std::holds_alternative<DppImmigration>(config.immigration) &&
            !std::holds_alternative<HomogeneousPoissonImmigration>(config.immigration) &&
            !std::holds_alternative<InhomogeneousPoissonImmigration>(config.immigration))
            cfg::fail("config.run", "moments mode needs a Poisson or DPP family");
    } else if (config.kind == "transform") {
        cfg::reject_unknown(run, "config.run",
                            {"kind", "t_grid", "s_grid", "mode", "n_rep"});
        cfg::number_list(cfg::field(run, "config.run", "t_grid"), "config.run.t_grid");
        cfg::number_list(cfg::field(run, "config.run", "s_grid"), "config.run.s_grid");
        const std::string mode = cfg::text(run, "config.run", "mode");
        if (mode != "pgf" && mode != "laplace")
            cfg::fail("config.run.mode", "expected 'pgf' or 'laplace'");
    } else if (config.kind == "experiment") {
        cfg::reject_unknown(run, "config.run",
                            {"kind", "name", "t", "t_grid", "s_grid", "n_rep",
                             "t_early", "t_late", "lambda_inf", "delta",
                             "dump_samples"});
        const std::string name = cfg::text(run, "config.run", "name");
        bool known = false;
        for (const auto& preset : experiment_catalog())
            if (preset.name == name) known = true;
        if (!known) cfg::fail("config.run.name", "unknown experiment '" + name + "'");
    } else {
        cfg::fail("config.run.kind", "unknown kind '" + config.kind + "'");
    }
    config.run = run;
    return config;
}

inline ExperimentConfig parse_config_text(const std::string& body) {
    Json root;
    try {
        root = Json::parse(body);
    } catch (const std::exception& e) {
        cfg::fail("config", std::string("invalid JSON: ") + e.what());
    }
    return parse_config(root);
}

// Dotted-path override, e.g. "run.n_rep=500" or "seed=7"; the value is parsed
// as JSON when possible and as a raw string otherwise.
inline void apply_override(Json& root, const std::string& assignment) {
    const auto eq = assignment.find('=');
    require(eq != std::string::npos && eq > 0, ErrorCode::config_error,
            "override must look like key.path=value");
    const std::string path = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);
    Json parsed;
    try {
        parsed = Json::parse(value);
    } catch (...) {
        parsed = value;
    }
    Json* node = &root;
    std::size_t start = 0;
    for (;;) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot - start);
        require(!key.empty(), ErrorCode::config_error, "empty key in override path");
        if (dot == std::string::npos) {
            (*node)[key] = parsed;
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

} // namespace brimm
