// dissipators.hpp — Lindblad, static Bloch–Redfield and time-dependent
// Bloch–Redfield dissipators, secular filtering, and the fast kernels used by
// the propagator.
//
// Redfield convention. With eigenbasis {|mu>}, energies E, frequencies
// w_{mu nu} = E_mu - E_nu and system coupling A, define the rate operator
//
//     Lambda_{mu nu} = kGammaPrefactor * A_{mu nu} * J(w_{nu mu}).
//
// The dissipator is D(rho) = -[A, Lambda rho - rho Lambda^dagger], which is
// the four-term tensor
//
//     R_{mu nu mu' nu'} = G+_{nu' nu mu mu'} + G-_{nu' nu mu mu'}
//                       - delta_{nu' nu} sum_k G+_{mu k k mu'}
//                       - delta_{mu' mu} sum_k G-_{nu' k k nu}
//     G+_{nu' nu mu mu'} = kGammaPrefactor J(w_{mu' mu}) A_{nu' nu} A_{mu mu'}
//     G-_{nu' nu mu mu'} = kGammaPrefactor J(w_{nu' nu}) A_{nu' nu} A_{mu mu'}
//
// so the golden-rule population decay rate of mu <- nu is J(w_{nu mu}) |A_{mu nu}|^2.
// Imaginary (Lamb-shift) parts of the correlation integrals are dropped.

#pragma once

#include "masterlab/environment.hpp"
#include "masterlab/hilbert.hpp"

#include <limits>
#include <memory>
#include <optional>
#include <vector>

namespace masterlab::diss {

using hilbert::cplx;
using hilbert::EigSystem;
using hilbert::Operator;
using hilbert::SparseOperator;

inline constexpr double kGammaPrefactor = 0.5;

// ------------------------------- Lindblad ------------------------------------

/// kappa (a rho a^dag - 1/2 {a^dag a, rho})
Operator lindblad_apply(const Operator& rho, const Operator& a, double kappa);

/// kappa |<mu|a|nu>|^2 in the eigenbasis `eig`.
double lindblad_rate(const EigSystem& eig, const Operator& a, double kappa, int mu, int nu);

// ------------------------------ Redfield -------------------------------------

struct CorrelationSpec {
    Operator coupling;             // Hermitian system operator A (lab basis)
    env::SpectralDensity spectrum;
};

/// Which Redfield terms survive. `cutoff` keeps |w_{mu nu} - w_{mu' nu'}| < omega_sec.
/// `full` is the nondegenerate-spectrum secular limit: only population transfer
/// (mu = nu, mu' = nu') and diagonal coherence decay (mu = mu', nu = nu').
struct Secular {
    enum class Mode { none, cutoff, full };
    Mode mode = Mode::none;
    double omega_sec = std::numeric_limits<double>::infinity();

    static Secular none() { return {}; }
    static Secular cutoff(double omega_sec);
    static Secular full() { return {Mode::full, 0.0}; }

    bool keep(double dw, int mu, int nu, int mup, int nup) const;
    bool active() const { return mode != Mode::none; }
};

using SparseSuperoperator = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

class RedfieldTensor {
public:
    RedfieldTensor(EigSystem basis, const Operator& coupling_lab, const env::SpectralDensity& spectrum,
                   Secular secular = Secular::none());

    int dim() const { return static_cast<int>(basis_.dim()); }
    const EigSystem& basis() const { return basis_; }
    const Operator& coupling() const { return a_; }           // A in the eigenbasis
    const Operator& rate_operator() const { return lambda_; } // Lambda in the eigenbasis
    const Secular& secular() const { return secular_; }

    /// Single tensor element from the four-term formula (after secular filtering).
    cplx entry(int mu, int nu, int mup, int nup) const;

    /// d rho_eig / dt dissipative part. Factored O(dim^3) path without a
    /// secular filter, sparse superoperator otherwise.
    Operator apply(const Operator& rho_eig) const;

    /// Materialised dim^2 x dim^2 matrix, row index mu*dim+nu, column mu'*dim+nu'.
    Operator dense() const;

    /// Largest |R| element (scale for the structural invariants).
    double max_entry() const;

private:
    void build_superoperator();

    EigSystem basis_;
    Operator a_;
    Operator lambda_;
    Operator a_lambda_;      // sum_k G+_{mu k k mu'}
    Operator lambdah_a_;     // sum_k G-_{nu' k k nu}
    Secular secular_;
    SparseSuperoperator super_;  // only filled when secular_.active()
};

/// Static tensor in the eigenbasis of H0.
RedfieldTensor build_redfield(const Operator& h0, const CorrelationSpec& spec, Secular secular = Secular::none());

Operator redfield_apply(const RedfieldTensor& r, const Operator& rho_eig);
/// Same, verifying that rho_eig is expressed in `basis`.
Operator redfield_apply(const RedfieldTensor& r, const Operator& rho_eig, const EigSystem& basis);

/// max over (mu', nu') of |sum_mu R[mu,mu,mu',nu']|
double trace_residual(const RedfieldTensor& r);
/// max |R[nu,mu,nu',mu'] - conj(R[mu,nu,mu',nu'])|
double hermiticity_residual(const RedfieldTensor& r);

/// Reorders and rephases `current` so column i continues column i of
/// `previous` (max-overlap matching, <prev_i|cur_i> real positive).
/// Throws AdiabaticityError when some tracked overlap drops below min_overlap.
EigSystem match_gauge(const EigSystem& previous, const EigSystem& current, double min_overlap = 0.5);

struct TdRedfieldResult {
    Operator drho;   // dissipative derivative, lab basis
    EigSystem gauge; // instantaneous eigenbasis, gauge-matched to the previous one
};

/// Diagonalises HS(t), tracks the gauge, builds the instantaneous tensor and
/// returns the dissipative part of d rho/dt in the lab basis.
TdRedfieldResult td_redfield_apply(const Operator& hs_t, const CorrelationSpec& spec, const Operator& rho_lab,
                                   const EigSystem* prev_gauge, Secular secular = Secular::none());

/// V Lambda V^dagger for the eigenbasis of h: the rate operator in h's basis.
Operator rate_operator_in_basis(const EigSystem& eig, const Operator& coupling, const env::SpectralDensity& spectrum);

// ------------------------- propagation kernels -------------------------------
//
// Kernels act on density matrices in a fixed working basis and add the
// dissipative derivative into `out`. rho is assumed Hermitian, which lets the
// kernels evaluate half the terms and add the adjoint.

/// An operator stored sparse when its fill is low, dense otherwise.
class WorkingOperator {
public:
    WorkingOperator() = default;
    explicit WorkingOperator(const Operator& m, double max_fill = 0.25);

    void left(const Operator& m, Operator& out) const;   // out = O m
    void right(const Operator& m, Operator& out) const;  // out = m O
    const Operator& dense() const { return dense_; }
    bool is_sparse() const { return sparse_; }

private:
    Operator dense_;
    SparseOperator sp_;
    bool sparse_ = false;
};

class DissipatorKernel {
public:
    virtual ~DissipatorKernel() = default;
    virtual void accumulate(double t, const Operator& rho, Operator& out) = 0;
};

class LindbladKernel final : public DissipatorKernel {
public:
    LindbladKernel(const Operator& a, double kappa);
    void accumulate(double t, const Operator& rho, Operator& out) override;

private:
    WorkingOperator a_;
    WorkingOperator adag_;
    WorkingOperator n_;
    double kappa_;
    Operator t1_, z_;
};

/// -[A, Lambda rho - rho Lambda^dagger] with a fixed Lambda (static Redfield).
class RateOperatorKernel final : public DissipatorKernel {
public:
    struct Scratch {
        Operator m, z, t;
    };

    RateOperatorKernel(const Operator& coupling, Operator lambda);
    void accumulate(double t, const Operator& rho, Operator& out) override;

    static void apply(const WorkingOperator& a, const Operator& lambda, const Operator& rho, Scratch& s,
                      Operator& out);

private:
    WorkingOperator a_;
    Operator lambda_;
    Scratch s_;
};

/// Secular-filtered static tensor applied through its eigenbasis.
class SuperoperatorKernel final : public DissipatorKernel {
public:
    /// `w` holds the tensor eigenbasis in working-basis coordinates: rho_eig = W^dag rho W.
    SuperoperatorKernel(RedfieldTensor tensor, Operator w);
    void accumulate(double t, const Operator& rho, Operator& out) override;

private:
    RedfieldTensor tensor_;
    Operator w_;
};

/// Time-dependent system Hamiltonian H_S(t) in the working basis.
struct HamiltonianSource {
    virtual ~HamiltonianSource() = default;
    virtual void at(double t, Operator& h) const = 0;
};

/// Instantaneous-eigenbasis Redfield, rebuilt at every call.
class TdRedfieldKernel final : public DissipatorKernel {
public:
    TdRedfieldKernel(std::shared_ptr<const HamiltonianSource> h, const Operator& coupling,
                     env::SpectralDensity spectrum, Secular secular = Secular::none());
    void accumulate(double t, const Operator& rho, Operator& out) override;

    const std::optional<EigSystem>& gauge() const { return gauge_; }

private:
    std::shared_ptr<const HamiltonianSource> h_;
    Operator a_dense_;
    WorkingOperator a_;
    env::SpectralDensity spectrum_;
    Secular secular_;
    std::optional<EigSystem> gauge_;
    Operator h_t_;
    Operator lambda_;
    RateOperatorKernel::Scratch s_;
};

/// Instantaneous-eigenbasis Redfield with the rate operator sampled on a
/// uniform grid over one drive period and linearly interpolated.
class TdRedfieldCacheKernel final : public DissipatorKernel {
public:
    TdRedfieldCacheKernel(const HamiltonianSource& h, const Operator& coupling, const env::SpectralDensity& spectrum,
                          double period, int samples);
    void accumulate(double t, const Operator& rho, Operator& out) override;

    /// Interpolated rate operator at time t.
    void rate_operator_at(double t, Operator& lambda) const;

private:
    WorkingOperator a_;
    double period_;
    std::vector<Operator> lambda_;
    Operator lambda_t_;
    RateOperatorKernel::Scratch s_;
};

}  // namespace masterlab::diss
