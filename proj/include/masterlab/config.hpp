// config.hpp — Strict-schema JSON experiment configuration.
//
// Frequencies and rates are given in GHz as w/2pi (kappa likewise as kappa/2pi)
// and converted to rad/ns when building run specifications. Unknown keys are
// rejected with ConfigError.

#pragma once

#include "masterlab/analysis.hpp"
#include "masterlab/dynamics.hpp"
#include "masterlab/environment.hpp"
#include "masterlab/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace masterlab::config {

enum class Experiment { purcell_sweep, driven_sweep, cavity_bench, filter_gain, rabi_vs_jc };
std::string to_string(Experiment e);
Experiment experiment_from_string(const std::string& s);

struct FilterConfig {
    std::optional<double> omega_f_ghz;  // default: cavity frequency
    double gamma_f_ghz = 0.0;
};

struct SpectrumConfig {
    env::SpectrumKind kind = env::SpectrumKind::flat;  // flat or ohmic
    std::optional<double> level_ghz;                   // flat level, default kappa
    std::optional<double> omega_c_ghz;                 // ohmic cutoff, default 2 w_r
    std::optional<FilterConfig> filter;
};

struct DriveConfig {
    model::DriveKind kind = model::DriveKind::none;
    double amplitude_ghz = 0.0;
    std::optional<double> frequency_ghz;  // default: cavity frequency
};

struct SecularConfig {
    diss::Secular::Mode mode = diss::Secular::Mode::none;
    double omega_sec_ghz = 0.0;
};

struct PropagationConfig {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double max_step_ns = 0.0;
    double t_final_ns = 0.0;  // 0 = automatic
    std::optional<dyn::FrameKind> frame;
    bool td_cache = false;
    int cache_samples = 256;
    double decay_constants = 2.5;
    int samples_per_period = 40;
    int undriven_samples = 2000;
};

struct SweepConfig {
    std::vector<double> kappa_ghz;
    std::vector<double> nbar_targets;
    std::vector<double> drive_amp_ghz;
    std::vector<double> filter_gamma_ghz;
};

struct ExperimentConfig {
    Experiment experiment = Experiment::purcell_sweep;
    std::string tag = "default";
    double omega_q_ghz = 5.304;
    double omega_r_ghz = 7.5;
    double g_ghz = 0.211;
    double kappa_ghz = 0.1;
    int n_trunc = 0;  // 0 = automatic
    model::HamiltonianKind hamiltonian = model::HamiltonianKind::rabi;
    SpectrumConfig spectrum;
    dyn::DissipatorKind dissipator = dyn::DissipatorKind::redfield_static;
    DriveConfig drive;
    SecularConfig secular;
    PropagationConfig propagation;
    SweepConfig sweep;
    std::string output_dir;
    std::uint64_t seed = 0;
};

/// Parses and validates; throws ConfigError naming the offending key.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully resolved echo; parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const ExperimentConfig& c);

/// 2 pi * ghz
double ghz_to_rad(double ghz);

/// Physical parameters for one run at the given kappa/2pi (GHz).
model::SystemParams system_params(const ExperimentConfig& c, double kappa_ghz);

/// Spectral density at the given kappa (calibrated Ohmic weight / flat level), filter included.
env::SpectralDensity build_spectrum(const ExperimentConfig& c, const model::SystemParams& p);
/// The same without the filter.
env::SpectralDensity build_base_spectrum(const ExperimentConfig& c, const model::SystemParams& p);

/// Run specification for a single decay measurement at kappa/2pi = kappa_ghz.
analysis::RunSpec run_spec(const ExperimentConfig& c, double kappa_ghz);

}  // namespace masterlab::config
