// analysis.hpp — Exponential rate fitting, analytic Purcell / Stark rates,
// single decay measurements and parallel drive sweeps.

#pragma once

#include "masterlab/dynamics.hpp"
#include "masterlab/environment.hpp"
#include "masterlab/model.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace masterlab::analysis {

// ---------------------------------- fit --------------------------------------

struct FitResult {
    double A = 0.0;
    double gamma = 0.0;  // rad/ns
    double B = 0.0;
    double rms_residual = 0.0;
    std::array<double, 3> covariance_diag{};  // var(A), var(gamma), var(B)
    int iterations = 0;
};

inline constexpr int kFitMaxIterations = 200;
inline constexpr int kFitMinSamples = 20;
inline constexpr double kFitMinDecayConstants = 2.0;

/// Levenberg–Marquardt fit of y = A exp(-gamma t) + B.
/// Throws InvalidInput on fewer than kFitMinSamples samples or a span below
/// kFitMinDecayConstants (judged from the log-slope pre-fit and again from the
/// fitted rate), and
/// NumericalError when the data does not decay or the solver does not converge.
FitResult fit_exp_decay(const std::vector<double>& t, const std::vector<double>& y);

// ----------------------------- analytic rates --------------------------------

/// J(w_q) |2 w_r g / (w_q^2 - w_r^2)|^2
double purcell_rate_analytic(const model::SystemParams& p, const env::SpectralDensity& j);

/// kappa (g/Delta)^2, the leading-order Lindblad Purcell rate.
double lindblad_purcell_rate(const model::SystemParams& p);

/// |2 w_r / (w_r + w_q)|^2
double br_lindblad_ratio(const model::SystemParams& p);

/// Purcell rate at the Stark-shifted qubit frequency w_q + 2 chi nbar.
double stark_rate(const model::SystemParams& p, const env::SpectralDensity& j, double nbar);

/// Gamma_base / Gamma_filtered.
double gain_from_traces(double gamma_base, double gamma_filtered);

// ------------------------------ measurements ---------------------------------

/// Drive amplitude reaching roughly `nbar` photons in a resonantly driven
/// cavity: eps = kappa sqrt(nbar) / 2 (RWA), eta = 2 eps (cosine).
double nbar_to_amplitude(model::DriveKind kind, double kappa, double nbar);

/// Photon number expected from `amplitude` under the same linear-cavity estimate.
double amplitude_to_nbar(model::DriveKind kind, double kappa, double amplitude);

inline constexpr int kMaxAutoTruncation = 40;

/// Truncation covering a coherent state of mean nbar: ceil(nbar + 5.5 sqrt(nbar) + 6), capped.
int auto_truncation(double nbar);

struct RunSpec {
    model::SystemParams params;
    model::HamiltonianKind hamiltonian = model::HamiltonianKind::rabi;
    model::DriveKind drive_kind = model::DriveKind::none;
    dyn::DissipatorSpec dissipator;
    dyn::PropagatorConfig propagation;       // t_final = 0 selects an automatic duration
    std::optional<dyn::FrameKind> frame;     // empty = rotating when driven, eigen otherwise
    bool auto_truncation = false;
    double decay_constants = 2.5;            // automatic duration: fit window length in 1/Gamma
    int samples_per_period = 40;
    int undriven_samples = 2000;
    int min_eig_samples = 200;
    int max_snapshots = 0;
};

struct DecayOutcome {
    std::string status = "ok";  // "ok" or the error message
    bool fit_ok = false;
    FitResult fit;
    // Undriven runs: the fitted asymptote B read as a dressed |e0>/|g0>
    // mixture gives the steady excited population p, and the downward
    // |g0> <- |e0> rate is gamma_down = gamma (1 - p). Equal to gamma when no
    // upward channel exists; driven runs copy gamma.
    double excited_steady = 0.0;
    double gamma_down = 0.0;
    double gamma_estimate = 0.0;  // golden-rule estimate used to size the run
    double nbar = 0.0;
    bool nbar_converged = false;
    int n_trunc = 0;
    double t_final = 0.0;
    double drive_period = 0.0;
    bool truncation_converged = true;
    double max_top_population = 0.0;
    double min_eig_min = 0.0;
    double adiabaticity_ratio = 0.0;
    double runtime_s = 0.0;
    dyn::Trajectory trajectory;
    std::vector<double> fit_t, fit_y;
};

/// Propagates from the dressed state |e0> and fits <sigma_z>(t). Driven runs
/// fit stroboscopic samples at integer drive periods after 3/kappa. Errors are
/// reported through `status` rather than thrown (InvalidInput still throws).
DecayOutcome run_decay(const RunSpec& spec);

/// Static golden-rule |g0> <- |e0> rate for the dissipator in `spec` (undriven).
double golden_rule_rate(const RunSpec& spec);

/// Golden-rule |g,n> <- |e,n> rate on the exact dressed ladder of H0,
/// averaged over a Poisson photon distribution of mean `nbar`. Uses the
/// dissipator of `spec` (Redfield J and coupling X, or Lindblad kappa and a).
/// Unlike stark_rate it keeps all orders in g/Delta.
double ladder_rate(const RunSpec& spec, double nbar);

struct SweepRow {
    double drive_amp = 0.0;    // rad/ns
    double nbar = 0.0;
    double gamma1 = 0.0;       // rad/ns
    double gamma1_over_gamma0 = 0.0;
    double formula_gamma1 = 0.0;
    double formula_over_formula0 = 0.0;
    double ladder_gamma1 = 0.0;  // ladder_rate at the measured nbar
    double fit_rms = 0.0;
    int n_trunc = 0;
    bool nbar_converged = false;
    bool truncation_converged = true;
    double min_eig = 0.0;
    double runtime_s = 0.0;
    std::string status = "ok";
};

/// One decay run per drive amplitude (drive_grid in rad/ns), up to `jobs` at a
/// time. gamma0 is the fitted zero-amplitude rate when the grid contains 0,
/// otherwise the analytic Purcell rate of the run's spectrum.
std::vector<SweepRow> run_sweep(const RunSpec& base, const std::vector<double>& drive_grid, int jobs = 1);

/// Spectrum used by the analytic formulas: the Redfield J, or flat kappa for Lindblad.
env::SpectralDensity formula_spectrum(const RunSpec& spec);

/// Runs `n` independent tasks on up to `jobs` threads.
void parallel_for(int n, int jobs, const std::function<void(int)>& task);

}  // namespace masterlab::analysis
