// dynamics.hpp — Master-equation generator, adaptive Dormand–Prince 5(4)
// propagation with dense output, trajectories and steady-state readout.
//
// Frames. The integrator state is rho_I, related to the density matrix in a
// fixed working basis B by rho_w = P(t) ∘ rho_I with P_ij = exp(-i (e_i - e_j) t)
// for reference energies e. The generator is
//
//     d rho_I/dt = conj(P) ∘ ( -i[H_w(t) - diag(e), rho_w] + D_w(rho_w) ).
//
// `lab` uses B = I, e = 0; `rotating` uses the bare basis with
// e = w_d a^dag a + (w_q/2) sigma_z, so a resonant drive and the bare cavity
// rotation are removed; `eigen` uses the eigenbasis of H0 with its energies.

#pragma once

#include "masterlab/dissipators.hpp"
#include "masterlab/hilbert.hpp"

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace masterlab::dyn {

using hilbert::cplx;
using hilbert::Operator;

enum class FrameKind { lab, rotating, eigen };
std::string to_string(FrameKind k);
FrameKind frame_kind_from_string(const std::string& s);

/// Working basis (columns of `basis`, lab coordinates) and reference energies.
struct Frame {
    FrameKind kind = FrameKind::lab;
    Operator basis;
    Eigen::VectorXd energies;

    static Frame lab(int dim);
    /// Bare basis with e = w_d n + (w_q/2) sigma_z on the qubit ⊗ resonator space.
    static Frame rotating(int n_trunc, double omega_q, double omega_d);
    static Frame eigen(const Operator& h0);

    int dim() const { return static_cast<int>(energies.size()); }
    Operator to_working(const Operator& lab_op) const;
    Operator to_lab(const Operator& working_op) const;
    /// Fills P(t), P_ij = exp(-i (e_i - e_j) t).
    void phases(double t, Operator& p) const;
};

/// H_d(t) = sum_k c_k(t) O_k; the sum must be Hermitian at every t.
struct DriveTerm {
    Operator op;
    std::function<cplx(double)> coefficient;
};

/// Lab-basis description of the open system.
struct OpenSystem {
    Operator h0;
    std::vector<DriveTerm> drive;
    Operator jump;      // Lindblad jump operator (cavity a)
    Operator coupling;  // Redfield system coupling operator A (cavity X)
    double drive_period = 0.0;  // 0 when undriven
};

enum class DissipatorKind { none, lindblad, redfield_static, redfield_td };
std::string to_string(DissipatorKind k);
DissipatorKind dissipator_kind_from_string(const std::string& s);

struct DissipatorSpec {
    DissipatorKind kind = DissipatorKind::lindblad;
    double kappa = 0.0;                                            // Lindblad rate
    env::SpectralDensity spectrum = env::SpectralDensity::flat(0.0);  // Redfield spectrum
    diss::Secular secular = diss::Secular::none();
    bool td_cache = false;       // stroboscopic rate-operator cache
    int cache_samples = 256;     // samples per drive period
};

/// H_S(t) in a working basis, for the time-dependent Redfield kernels.
class WorkingHamiltonian final : public diss::HamiltonianSource {
public:
    WorkingHamiltonian(Operator h0_w, std::vector<DriveTerm> drive_w);
    void at(double t, Operator& h) const override;

private:
    Operator h0_;
    std::vector<DriveTerm> drive_;
};

/// Linear generator of the master equation in a chosen frame.
class MasterEquation {
public:
    MasterEquation(const OpenSystem& sys, const DissipatorSpec& dissipator, Frame frame);

    int dim() const { return frame_.dim(); }
    const Frame& frame() const { return frame_; }

    /// dy = d rho_I / dt at time t.
    void rhs(double t, const Operator& y, Operator& dy);

    /// rho_w = P(t) ∘ y.
    void working_state(double t, const Operator& y, Operator& rho_w) const;
    Operator lab_state(double t, const Operator& y) const;
    Operator initial_state(const Operator& rho_lab) const { return frame_.to_working(rho_lab); }

    long rhs_evaluations() const { return rhs_evals_; }
    /// Diagnostic (drive period) * omega_c for time-dependent Redfield, 0 otherwise.
    double adiabaticity_ratio() const { return adiabaticity_; }

private:
    Frame frame_;
    diss::WorkingOperator h_static_;  // H0_w - diag(e)
    bool has_static_ = false;
    std::vector<diss::WorkingOperator> drive_ops_;
    std::vector<std::function<cplx(double)>> drive_coeff_;
    std::unique_ptr<diss::DissipatorKernel> kernel_;
    double adiabaticity_ = 0.0;
    long rhs_evals_ = 0;
    Operator p_, rho_w_, z_, t_, out_;
};

struct PropagatorConfig {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double max_step = 0.0;      // ns, 0 = unlimited
    double initial_step = 0.0;  // ns, 0 = automatic
    double t_final = 0.0;       // ns
    long max_steps = 20'000'000;
};

void validate(const PropagatorConfig& cfg);

/// What to record. Observables are given in the lab basis.
struct OutputSpec {
    std::vector<double> times;  // strictly increasing, within [0, t_final]; empty = {0, t_final}
    std::vector<std::pair<std::string, Operator>> observables;
    int min_eig_stride = 0;     // min-eigenvalue diagnostic every k-th sample (0 = first and last only)
    int max_snapshots = 0;      // stored density matrices (thinned uniformly, capped at 2000)
    Operator top_fock;          // optional projector for the truncation guard
};

struct Trajectory {
    std::vector<double> times;
    std::map<std::string, std::vector<double>> observables;  // always includes "trace"
    std::vector<double> min_eig_times;
    std::vector<double> min_eig;
    std::vector<double> state_times;
    std::vector<Operator> states;  // lab basis
    double min_eig_min = 0.0;
    double max_top_population = 0.0;
    bool truncation_converged = true;
    long steps_accepted = 0;
    long steps_rejected = 0;
    long rhs_evaluations = 0;

    const std::vector<double>& series(const std::string& name) const;
};

inline constexpr double kTraceTolerance = 1e-6;
inline constexpr double kTruncationTolerance = 1e-6;
inline constexpr double kPositivityTolerance = 1e-6;
inline constexpr int kMaxSnapshots = 2000;

/// Propagates rho0 (lab basis) to cfg.t_final. Throws StiffnessError on step
/// underflow and NumericalError when the trace drifts beyond 1e-6.
Trajectory propagate(MasterEquation& eq, const Operator& rho0, const PropagatorConfig& cfg, const OutputSpec& out);

/// Mean <a^dag a> over the final drive period. Throws NumericalError when the
/// period average changed by more than 0.5% relative to the preceding period.
double steady_mean_photon(const Trajectory& traj, double drive_period, const std::string& name = "photon_number");

/// Period average of a series over [t_end - k*period, t_end - (k-1)*period].
double period_average(const Trajectory& traj, const std::string& name, double period, int k);

}  // namespace masterlab::dyn
