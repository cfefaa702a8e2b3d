// masterlab — experiment runner.
//
//   masterlab run <config.json> [--out DIR] [--jobs N]
//   masterlab validate <config.json>
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure
// (any sweep row or run whose status is not ok), 1 anything else.

#include "masterlab/config.hpp"
#include "masterlab/errors.hpp"
#include "masterlab/experiments.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

namespace fs = std::filesystem;
using namespace masterlab;

fs::path output_dir(const std::string& flag, const config::ExperimentConfig& c) {
    if (!flag.empty()) return flag;
    if (!c.output_dir.empty()) return c.output_dir;
    if (const char* env = std::getenv("MASTERLAB_OUT"); env && *env) return env;
    return "out";
}

int cmd_validate(const std::string& path) {
    const config::ExperimentConfig c = experiments::resolve(config::load_config(path));
    std::cout << config::to_json(c).dump(2) << "\n";
    std::cerr << path << ": ok (" << config::to_string(c.experiment) << ", tag " << c.tag << ")\n";
    return kExitOk;
}

int cmd_run(const std::string& path, const std::string& out_flag, int jobs) {
    const config::ExperimentConfig c = experiments::resolve(config::load_config(path));
    const fs::path dir = output_dir(out_flag, c);
    std::cerr << "masterlab: running " << config::to_string(c.experiment) << " (tag " << c.tag << ", " << jobs
              << " job" << (jobs == 1 ? "" : "s") << ")\n";
    const experiments::ExperimentResult r = experiments::run(c, jobs);
    for (const auto& p : experiments::write_outputs(dir, c, r)) std::cerr << "  wrote " << p.string() << "\n";
    if (!r.ok) {
        std::cerr << "masterlab: some runs failed; see the status column and the report\n";
        return kExitNumerical;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"masterlab: driven-dissipative qubit-resonator experiments"};
    app.require_subcommand(1);

    std::string run_config, out_dir;
    int jobs = 1;
    auto* run = app.add_subcommand("run", "Run the experiment described by a JSON config");
    run->add_option("config", run_config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "Output directory (default: config output_dir, $MASTERLAB_OUT, ./out)");
    run->add_option("--jobs", jobs, "Parallel runs within a sweep")
        ->check(CLI::Range(1, 256))
        ->default_val(1);

    std::string validate_config;
    auto* validate = app.add_subcommand("validate", "Check a config and print its resolved form");
    validate->add_option("config", validate_config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run) return cmd_run(run_config, out_dir, jobs);
        return cmd_validate(validate_config);
    } catch (const ConfigError& e) {
        std::cerr << "masterlab: config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const InvalidInput& e) {
        std::cerr << "masterlab: invalid input: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NumericalError& e) {
        std::cerr << "masterlab: numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "masterlab: " << e.what() << "\n";
        return kExitOther;
    }
}
