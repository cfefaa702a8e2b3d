// experiments.hpp — The named experiments behind the masterlab CLI.
//
// Each experiment turns a resolved ExperimentConfig into one or more tables
// (one per curve) plus a JSON report. Writing is separate so that the tests
// can run experiments without touching the filesystem.

#pragma once

#include "masterlab/analysis.hpp"
#include "masterlab/config.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace masterlab::experiments {

using Cell = std::variant<double, long, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add_row(std::vector<Cell> row);
    /// Column index by name; throws InvalidInput if absent.
    std::size_t column(const std::string& name) const;
    double number(std::size_t row, const std::string& name) const;
};

struct Curve {
    std::string suffix;  // "" for the main table, otherwise appended as _<suffix>
    Table table;
};

struct ExperimentResult {
    std::vector<Curve> curves;
    nlohmann::json report = nlohmann::json::object();
    bool ok = true;  // false when any row reports a numerical failure
};

/// Fills in default grids and other implicit settings so that the echoed
/// config fully determines the run.
config::ExperimentConfig resolve(config::ExperimentConfig c);

/// Runs the experiment named in `c` (which should already be resolved).
ExperimentResult run(const config::ExperimentConfig& c, int jobs = 1);

ExperimentResult purcell_sweep(const config::ExperimentConfig& c, int jobs);
ExperimentResult driven_sweep(const config::ExperimentConfig& c, int jobs);
ExperimentResult cavity_bench(const config::ExperimentConfig& c, int jobs);
ExperimentResult filter_gain(const config::ExperimentConfig& c, int jobs);
ExperimentResult rabi_vs_jc(const config::ExperimentConfig& c, int jobs);

// ------------------------------ cavity bench ---------------------------------

/// Driven, decoupled (g = 0) cavity started in vacuum.
struct CavitySpec {
    model::SystemParams params;  // g is ignored and forced to 0
    model::DriveKind drive_kind = model::DriveKind::cosine;
    env::SpectralDensity spectrum = env::SpectralDensity::flat(0.0);
    double t_final = 0.0;          // ns, 0 = 20 / kappa
    int samples_per_period = 40;
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
};

struct CavityTrace {
    std::string label;  // lindblad, redfield-nonsecular, redfield-full-secular
    std::string status = "ok";
    std::vector<double> times;
    std::vector<double> nbar;
    double steady_nbar = 0.0;  // mean over the final drive period
    double runtime_s = 0.0;
};

/// Steady photon number 4 eps^2 / kappa^2 of the linear cavity (eps the RWA amplitude).
double cavity_analytic_nbar(model::DriveKind kind, double kappa, double amplitude);

/// Lindblad, non-secular static Redfield and fully secular static Redfield runs.
std::vector<CavityTrace> run_cavity_bench(const CavitySpec& spec, int jobs = 1);

// --------------------------------- output ------------------------------------

/// Decimal-dot, 12 significant digits.
std::string format_number(double x);
std::string to_csv(const Table& t);

/// Writes through a temporary file in the same directory and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

/// Writes <experiment>_<tag>[_suffix].csv, <experiment>_<tag>.config.json and
/// <experiment>_<tag>.report.json into `dir`; returns the written paths.
std::vector<std::filesystem::path> write_outputs(const std::filesystem::path& dir, const config::ExperimentConfig& c,
                                                 const ExperimentResult& r);

/// True for row statuses that are not numerical failures ("ok...", "no-decay...").
bool status_ok(const std::string& status);

}  // namespace masterlab::experiments
