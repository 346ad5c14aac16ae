// Command-line front end: run a configured computation or list the built-in
// experiment presets.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "brimm/runner.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good())
        brimm::raise(brimm::ErrorCode::io_error, "cannot read config file " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"branching processes with point-process immigration"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "execute a configured computation");
    std::string config_path;
    std::string preset;
    std::string out_dir;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    run->add_option("--config", config_path, "path to a JSON config document");
    run->add_option("--preset", preset, "built-in preset name (see `list`)");
    run->add_option("--seed", seed, "master seed")->each([&](const std::string&) {
        seed_set = true;
    });
    run->add_option("--threads", threads, "worker thread count");
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--override", overrides,
                    "dotted-path config override KEY=VALUE (repeatable)");

    auto* list = app.add_subcommand("list", "list built-in experiment presets");

    CLI11_PARSE(app, argc, argv);

    try {
        if (list->parsed()) {
            for (const auto& preset_entry : brimm::experiment_catalog()) {
                std::cout << preset_entry.name << "\n  " << preset_entry.description
                          << "\n  checks: " << preset_entry.theorem
                          << "\n  operation: " << preset_entry.operation << "\n";
            }
            return 0;
        }

        if (config_path.empty() == preset.empty()) {
            std::cerr << "error: provide exactly one of --config or --preset\n";
            return 1;
        }
        const std::string body = config_path.empty()
                                     ? brimm::preset_config_text(preset)
                                     : read_file(config_path);
        brimm::Json root = brimm::Json::parse(body);
        for (const auto& assignment : overrides)
            brimm::apply_override(root, assignment);
        if (seed_set) root["seed"] = seed;
        if (threads > 0) root["threads"] = threads;
        if (!out_dir.empty()) root["output"] = brimm::Json{{"dir", out_dir}};

        const auto config = brimm::parse_config(root);
        const auto result = brimm::run_config(config);
        std::cout << result.summary << "\n";
        for (const auto& record : result.outputs)
            std::cout << "  wrote " << config.output_dir << "/" << record.path << " ("
                      << record.bytes << " bytes, fnv64 " << record.fnv64 << ")\n";
        return result.exit_code;
    } catch (const brimm::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
