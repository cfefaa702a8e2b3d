// dissipators.cpp — Lindblad and Bloch–Redfield generators.

#include "masterlab/dissipators.hpp"

#include "masterlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

namespace masterlab::diss {

namespace {

void require_square(const Operator& m, Eigen::Index dim, const char* what) {
    if (m.rows() != dim || m.cols() != dim) {
        std::ostringstream os;
        os << what << ": dimension mismatch (" << m.rows() << "x" << m.cols() << ", expected " << dim << "x" << dim
           << ")";
        throw InvalidInput(os.str());
    }
}

// Lambda_{mu nu} = kGammaPrefactor A_{mu nu} J(E_nu - E_mu), all in the eigenbasis.
Operator eigen_rate_operator(const Eigen::VectorXd& e, const Operator& a_eig, const env::SpectralDensity& j) {
    const Eigen::Index d = e.size();
    Operator lambda(d, d);
    for (Eigen::Index nu = 0; nu < d; ++nu) {
        for (Eigen::Index mu = 0; mu < d; ++mu) {
            lambda(mu, nu) = kGammaPrefactor * a_eig(mu, nu) * j.eval(e(nu) - e(mu));
        }
    }
    return lambda;
}

}  // namespace

// ------------------------------- Lindblad ------------------------------------

Operator lindblad_apply(const Operator& rho, const Operator& a, double kappa) {
    require_square(rho, a.rows(), "lindblad_apply");
    require_square(a, a.rows(), "lindblad_apply");
    const Operator adag = a.adjoint();
    const Operator n = adag * a;
    return kappa * (a * rho * adag - 0.5 * (n * rho + rho * n));
}

double lindblad_rate(const EigSystem& eig, const Operator& a, double kappa, int mu, int nu) {
    const int d = static_cast<int>(eig.dim());
    if (mu < 0 || nu < 0 || mu >= d || nu >= d) throw InvalidInput("lindblad_rate: state index out of range");
    require_square(a, d, "lindblad_rate");
    const cplx amp = eig.vectors.col(mu).dot(a * eig.vectors.col(nu));  // <mu|a|nu>
    return kappa * std::norm(amp);
}

// ------------------------------ Redfield -------------------------------------

Secular Secular::cutoff(double omega_sec) {
    if (!(omega_sec > 0.0)) throw InvalidInput("secular cutoff omega_sec must be positive");
    return {Mode::cutoff, omega_sec};
}

bool Secular::keep(double dw, int mu, int nu, int mup, int nup) const {
    switch (mode) {
        case Mode::none: return true;
        case Mode::cutoff: return std::abs(dw) < omega_sec;
        case Mode::full: return (mu == mup && nu == nup) || (mu == nu && mup == nup);
    }
    return true;
}

RedfieldTensor::RedfieldTensor(EigSystem basis, const Operator& coupling_lab, const env::SpectralDensity& spectrum,
                               Secular secular)
    : basis_(std::move(basis)), secular_(secular) {
    const Eigen::Index d = basis_.dim();
    require_square(coupling_lab, d, "RedfieldTensor: coupling");
    if (!hilbert::is_hermitian(coupling_lab)) throw InvalidInput("RedfieldTensor: coupling operator is not Hermitian");
    a_ = basis_.to_eigen(coupling_lab);
    lambda_ = eigen_rate_operator(basis_.values, a_, spectrum);
    a_lambda_ = a_ * lambda_;
    lambdah_a_ = lambda_.adjoint() * a_;
    if (secular_.active()) build_superoperator();
}

cplx RedfieldTensor::entry(int mu, int nu, int mup, int nup) const {
    const Eigen::VectorXd& e = basis_.values;
    const double dw = (e(mu) - e(nu)) - (e(mup) - e(nup));
    if (!secular_.keep(dw, mu, nu, mup, nup)) return 0.0;
    // G+_{nu' nu mu mu'} = A_{nu' nu} Lambda_{mu mu'};  G-_{nu' nu mu mu'} = conj(Lambda_{nu nu'}) A_{mu mu'}
    cplx r = a_(nup, nu) * lambda_(mu, mup) + std::conj(lambda_(nu, nup)) * a_(mu, mup);
    if (nup == nu) r -= a_lambda_(mu, mup);
    if (mup == mu) r -= lambdah_a_(nup, nu);
    return r;
}

void RedfieldTensor::build_superoperator() {
    const int d = dim();
    const Eigen::Index d2 = static_cast<Eigen::Index>(d) * d;
    std::vector<Eigen::Triplet<cplx>> trip;
    for (int mu = 0; mu < d; ++mu) {
        for (int nu = 0; nu < d; ++nu) {
            for (int mup = 0; mup < d; ++mup) {
                for (int nup = 0; nup < d; ++nup) {
                    const cplx r = entry(mu, nu, mup, nup);
                    if (r != 0.0) trip.emplace_back(mu * d + nu, mup * d + nup, r);
                }
            }
        }
    }
    super_.resize(d2, d2);
    super_.setFromTriplets(trip.begin(), trip.end());
    super_.makeCompressed();
}

Operator RedfieldTensor::apply(const Operator& rho) const {
    const int d = dim();
    require_square(rho, d, "redfield_apply");
    if (!secular_.active()) {
        // -[A, Lambda rho - rho Lambda^dagger], valid for any (not only Hermitian) rho
        const Operator m = lambda_ * rho - rho * lambda_.adjoint();
        return m * a_ - a_ * m;
    }
    Eigen::VectorXcd v(static_cast<Eigen::Index>(d) * d);
    for (int mu = 0; mu < d; ++mu)
        for (int nu = 0; nu < d; ++nu) v(mu * d + nu) = rho(mu, nu);
    const Eigen::VectorXcd w = super_ * v;
    Operator out(d, d);
    for (int mu = 0; mu < d; ++mu)
        for (int nu = 0; nu < d; ++nu) out(mu, nu) = w(mu * d + nu);
    return out;
}

Operator RedfieldTensor::dense() const {
    const int d = dim();
    if (d > 64) throw InvalidInput("RedfieldTensor::dense: refusing to materialise a tensor with dim > 64");
    const Eigen::Index d2 = static_cast<Eigen::Index>(d) * d;
    Operator out(d2, d2);
    for (int mu = 0; mu < d; ++mu)
        for (int nu = 0; nu < d; ++nu)
            for (int mup = 0; mup < d; ++mup)
                for (int nup = 0; nup < d; ++nup) out(mu * d + nu, mup * d + nup) = entry(mu, nu, mup, nup);
    return out;
}

double RedfieldTensor::max_entry() const {
    const int d = dim();
    double m = 0.0;
    for (int mu = 0; mu < d; ++mu)
        for (int nu = 0; nu < d; ++nu)
            for (int mup = 0; mup < d; ++mup)
                for (int nup = 0; nup < d; ++nup) m = std::max(m, std::abs(entry(mu, nu, mup, nup)));
    return m;
}

RedfieldTensor build_redfield(const Operator& h0, const CorrelationSpec& spec, Secular secular) {
    if (!hilbert::is_hermitian(h0)) throw InvalidInput("build_redfield: Hamiltonian is not Hermitian");
    return RedfieldTensor(hilbert::eigh(h0), spec.coupling, spec.spectrum, secular);
}

Operator redfield_apply(const RedfieldTensor& r, const Operator& rho_eig) { return r.apply(rho_eig); }

Operator redfield_apply(const RedfieldTensor& r, const Operator& rho_eig, const EigSystem& basis) {
    if (basis.dim() != r.dim() || hilbert::max_abs(basis.vectors - r.basis().vectors) > 1e-12 ||
        (basis.values - r.basis().values).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + r.basis().values.cwiseAbs().maxCoeff())) {
        throw InvalidInput("redfield_apply: density matrix basis does not match the tensor basis");
    }
    return r.apply(rho_eig);
}

double trace_residual(const RedfieldTensor& r) {
    const int d = r.dim();
    double worst = 0.0;
    for (int mup = 0; mup < d; ++mup) {
        for (int nup = 0; nup < d; ++nup) {
            cplx s = 0.0;
            for (int mu = 0; mu < d; ++mu) s += r.entry(mu, mu, mup, nup);
            worst = std::max(worst, std::abs(s));
        }
    }
    return worst;
}

double hermiticity_residual(const RedfieldTensor& r) {
    const int d = r.dim();
    double worst = 0.0;
    for (int mu = 0; mu < d; ++mu)
        for (int nu = 0; nu < d; ++nu)
            for (int mup = 0; mup < d; ++mup)
                for (int nup = 0; nup < d; ++nup)
                    worst = std::max(worst, std::abs(r.entry(nu, mu, nup, mup) - std::conj(r.entry(mu, nu, mup, nup))));
    return worst;
}

EigSystem match_gauge(const EigSystem& previous, const EigSystem& current, double min_overlap) {
    const Eigen::Index d = previous.dim();
    if (current.dim() != d) throw InvalidInput("match_gauge: dimension mismatch");
    const Operator ov = previous.vectors.adjoint() * current.vectors;  // <prev_i|cur_j>
    const Eigen::MatrixXd mag = ov.cwiseAbs();

    // Global greedy assignment: strongest overlaps first.
    std::vector<std::tuple<double, Eigen::Index, Eigen::Index>> pairs;
    pairs.reserve(static_cast<std::size_t>(d * d));
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            if (mag(i, j) >= min_overlap) pairs.emplace_back(mag(i, j), i, j);
    std::sort(pairs.begin(), pairs.end(), [](const auto& x, const auto& y) { return std::get<0>(x) > std::get<0>(y); });

    std::vector<Eigen::Index> assign(static_cast<std::size_t>(d), -1);
    std::vector<bool> taken(static_cast<std::size_t>(d), false);
    for (const auto& [m, i, j] : pairs) {
        if (assign[static_cast<std::size_t>(i)] >= 0 || taken[static_cast<std::size_t>(j)]) continue;
        assign[static_cast<std::size_t>(i)] = j;
        taken[static_cast<std::size_t>(j)] = true;
    }

    EigSystem out;
    out.values.resize(d);
    out.vectors.resize(d, d);
    out.labels = previous.labels;
    for (Eigen::Index i = 0; i < d; ++i) {
        const Eigen::Index j = assign[static_cast<std::size_t>(i)];
        if (j < 0) {
            std::ostringstream os;
            os << "adiabaticity violated: tracked state " << i << " has maximal overlap " << mag.row(i).maxCoeff()
               << " < " << min_overlap << " with the new instantaneous eigenbasis";
            throw AdiabaticityError(os.str());
        }
        const cplx o = ov(i, j);
        out.values(i) = current.values(j);
        out.vectors.col(i) = current.vectors.col(j) * (std::conj(o) / std::abs(o));
    }
    return out;
}

TdRedfieldResult td_redfield_apply(const Operator& hs_t, const CorrelationSpec& spec, const Operator& rho_lab,
                                   const EigSystem* prev_gauge, Secular secular) {
    if (!hilbert::is_hermitian(hs_t)) throw InvalidInput("td_redfield_apply: Hamiltonian is not Hermitian");
    require_square(rho_lab, hs_t.rows(), "td_redfield_apply");
    EigSystem eig = hilbert::eigh(hs_t);
    if (prev_gauge != nullptr) eig = match_gauge(*prev_gauge, eig);
    const RedfieldTensor r(eig, spec.coupling, spec.spectrum, secular);
    TdRedfieldResult out{eig.to_lab(r.apply(eig.to_eigen(rho_lab))), std::move(eig)};
    return out;
}

Operator rate_operator_in_basis(const EigSystem& eig, const Operator& coupling, const env::SpectralDensity& spectrum) {
    require_square(coupling, eig.dim(), "rate_operator_in_basis");
    return eig.to_lab(eigen_rate_operator(eig.values, eig.to_eigen(coupling), spectrum));
}

// ------------------------- propagation kernels -------------------------------

WorkingOperator::WorkingOperator(const Operator& m, double max_fill) : dense_(m) {
    const double nnz = static_cast<double>((m.array() != cplx(0.0)).count());
    const double fill = m.size() == 0 ? 0.0 : nnz / static_cast<double>(m.size());
    sparse_ = fill <= max_fill;
    if (sparse_) sp_ = hilbert::to_sparse(m);
}

void WorkingOperator::left(const Operator& m, Operator& out) const {
    if (sparse_) out.noalias() = sp_ * m;
    else out.noalias() = dense_ * m;
}

void WorkingOperator::right(const Operator& m, Operator& out) const {
    if (sparse_) out.noalias() = m * sp_;
    else out.noalias() = m * dense_;
}

LindbladKernel::LindbladKernel(const Operator& a, double kappa)
    : a_(a), adag_(Operator(a.adjoint())), n_(Operator(a.adjoint() * a)), kappa_(kappa) {}

void LindbladKernel::accumulate(double, const Operator& rho, Operator& out) {
    // Z = kappa/2 (a rho a^dag - n rho); D = Z + Z^dagger for Hermitian rho
    a_.left(rho, t1_);
    adag_.right(t1_, z_);
    n_.left(rho, t1_);
    z_ -= t1_;
    z_ *= 0.5 * kappa_;
    out += z_;
    out += z_.adjoint();
}

RateOperatorKernel::RateOperatorKernel(const Operator& coupling, Operator lambda)
    : a_(coupling), lambda_(std::move(lambda)) {}

void RateOperatorKernel::apply(const WorkingOperator& a, const Operator& lambda, const Operator& rho,
                               Scratch& s, Operator& out) {
    // M = Lambda rho;  Z = M A - A M;  D = Z + Z^dagger = -[A, Lambda rho - rho Lambda^dagger]
    s.m.noalias() = lambda * rho;
    a.right(s.m, s.z);
    a.left(s.m, s.t);
    s.z -= s.t;
    out += s.z;
    out += s.z.adjoint();
}

void RateOperatorKernel::accumulate(double, const Operator& rho, Operator& out) { apply(a_, lambda_, rho, s_, out); }

SuperoperatorKernel::SuperoperatorKernel(RedfieldTensor tensor, Operator w) : tensor_(std::move(tensor)), w_(std::move(w)) {
    require_square(w_, tensor_.dim(), "SuperoperatorKernel");
}

void SuperoperatorKernel::accumulate(double, const Operator& rho, Operator& out) {
    const Operator rho_eig = w_.adjoint() * rho * w_;
    out.noalias() += w_ * tensor_.apply(rho_eig) * w_.adjoint();
}

TdRedfieldKernel::TdRedfieldKernel(std::shared_ptr<const HamiltonianSource> h, const Operator& coupling,
                                   env::SpectralDensity spectrum, Secular secular)
    : h_(std::move(h)), a_dense_(coupling), a_(coupling), spectrum_(std::move(spectrum)), secular_(secular) {
    if (!h_) throw InvalidInput("TdRedfieldKernel: missing Hamiltonian source");
}

void TdRedfieldKernel::accumulate(double t, const Operator& rho, Operator& out) {
    h_->at(t, h_t_);
    if (secular_.active()) {
        const CorrelationSpec spec{a_dense_, spectrum_};
        TdRedfieldResult r = td_redfield_apply(h_t_, spec, rho, gauge_ ? &*gauge_ : nullptr, secular_);
        out += r.drho;
        gauge_ = std::move(r.gauge);
        return;
    }
    EigSystem eig = hilbert::eigh(h_t_);
    if (gauge_) eig = match_gauge(*gauge_, eig);
    lambda_ = rate_operator_in_basis(eig, a_dense_, spectrum_);
    gauge_ = std::move(eig);
    RateOperatorKernel::apply(a_, lambda_, rho, s_, out);
}

TdRedfieldCacheKernel::TdRedfieldCacheKernel(const HamiltonianSource& h, const Operator& coupling,
                                             const env::SpectralDensity& spectrum, double period, int samples)
    : a_(coupling), period_(period) {
    if (!(period > 0.0)) throw InvalidInput("TdRedfieldCacheKernel: drive period must be positive");
    if (samples < 2) throw InvalidInput("TdRedfieldCacheKernel: need at least 2 samples per period");
    lambda_.reserve(static_cast<std::size_t>(samples));
    Operator ht;
    std::optional<EigSystem> gauge;
    for (int k = 0; k < samples; ++k) {
        h.at(period * k / samples, ht);
        EigSystem eig = hilbert::eigh(ht);
        if (gauge) eig = match_gauge(*gauge, eig);
        lambda_.push_back(rate_operator_in_basis(eig, coupling, spectrum));
        gauge = std::move(eig);
    }
}

void TdRedfieldCacheKernel::rate_operator_at(double t, Operator& lambda) const {
    const double m = static_cast<double>(lambda_.size());
    double s = std::fmod(t / period_, 1.0);
    if (s < 0.0) s += 1.0;
    s *= m;
    const auto k = static_cast<std::size_t>(std::min(std::floor(s), m - 1.0));
    const double f = s - static_cast<double>(k);
    const std::size_t k1 = (k + 1) % lambda_.size();
    lambda = (1.0 - f) * lambda_[k] + f * lambda_[k1];
}

void TdRedfieldCacheKernel::accumulate(double t, const Operator& rho, Operator& out) {
    rate_operator_at(t, lambda_t_);
    RateOperatorKernel::apply(a_, lambda_t_, rho, s_, out);
}

}  // namespace masterlab::diss
