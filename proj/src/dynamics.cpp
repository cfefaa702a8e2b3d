// dynamics.cpp — Master-equation generator and Dormand–Prince 5(4) propagation.

#include "masterlab/dynamics.hpp"

#include "masterlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace masterlab::dyn {

std::string to_string(FrameKind k) {
    switch (k) {
        case FrameKind::lab: return "lab";
        case FrameKind::rotating: return "rotating";
        case FrameKind::eigen: return "eigen";
    }
    return "?";
}

FrameKind frame_kind_from_string(const std::string& s) {
    if (s == "lab") return FrameKind::lab;
    if (s == "rotating") return FrameKind::rotating;
    if (s == "eigen") return FrameKind::eigen;
    throw InvalidInput("unknown frame '" + s + "' (expected lab, rotating or eigen)");
}

std::string to_string(DissipatorKind k) {
    switch (k) {
        case DissipatorKind::none: return "none";
        case DissipatorKind::lindblad: return "lindblad";
        case DissipatorKind::redfield_static: return "redfield-static";
        case DissipatorKind::redfield_td: return "redfield-td";
    }
    return "?";
}

DissipatorKind dissipator_kind_from_string(const std::string& s) {
    if (s == "none") return DissipatorKind::none;
    if (s == "lindblad") return DissipatorKind::lindblad;
    if (s == "redfield-static") return DissipatorKind::redfield_static;
    if (s == "redfield-td") return DissipatorKind::redfield_td;
    throw InvalidInput("unknown dissipator '" + s + "' (expected lindblad, redfield-static or redfield-td)");
}

// --------------------------------- frames ------------------------------------

Frame Frame::lab(int dim) {
    Frame f;
    f.kind = FrameKind::lab;
    f.basis = Operator::Identity(dim, dim);
    f.energies = Eigen::VectorXd::Zero(dim);
    return f;
}

Frame Frame::rotating(int n_trunc, double omega_q, double omega_d) {
    const hilbert::QubitResonator ops(n_trunc);
    Frame f;
    f.kind = FrameKind::rotating;
    f.basis = Operator::Identity(ops.dim, ops.dim);
    f.energies = omega_d * ops.n.diagonal().real() + 0.5 * omega_q * ops.sz.diagonal().real();
    return f;
}

Frame Frame::eigen(const Operator& h0) {
    hilbert::EigSystem eig = hilbert::eigh(h0);
    Frame f;
    f.kind = FrameKind::eigen;
    f.basis = std::move(eig.vectors);
    f.energies = std::move(eig.values);
    return f;
}

Operator Frame::to_working(const Operator& lab_op) const {
    if (kind == FrameKind::lab || kind == FrameKind::rotating) return lab_op;
    return basis.adjoint() * lab_op * basis;
}

Operator Frame::to_lab(const Operator& working_op) const {
    if (kind == FrameKind::lab || kind == FrameKind::rotating) return working_op;
    return basis * working_op * basis.adjoint();
}

void Frame::phases(double t, Operator& p) const {
    const Eigen::Index d = energies.size();
    Eigen::VectorXcd phi(d);
    for (Eigen::Index i = 0; i < d; ++i) phi(i) = std::polar(1.0, -energies(i) * t);
    p.noalias() = phi * phi.adjoint();
}

// ------------------------------- generator -----------------------------------

WorkingHamiltonian::WorkingHamiltonian(Operator h0_w, std::vector<DriveTerm> drive_w)
    : h0_(std::move(h0_w)), drive_(std::move(drive_w)) {}

void WorkingHamiltonian::at(double t, Operator& h) const {
    h = h0_;
    for (const auto& d : drive_) h += d.coefficient(t) * d.op;
}

namespace {

// Drops round-off entries so exactly-structured operators stay sparse.
Operator clean(Operator m, double scale) {
    const double cut = 1e-13 * scale;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            if (std::abs(m(i, j)) < cut) m(i, j) = 0.0;
    return m;
}

void require_dim(const Operator& m, int dim, const char* what) {
    if (m.rows() != dim || m.cols() != dim) {
        throw InvalidInput(std::string("MasterEquation: ") + what + " has the wrong dimension");
    }
}

}  // namespace

MasterEquation::MasterEquation(const OpenSystem& sys, const DissipatorSpec& ds, Frame frame) : frame_(std::move(frame)) {
    const int d = frame_.dim();
    require_dim(sys.h0, d, "H0");
    if (!hilbert::is_hermitian(sys.h0)) throw InvalidInput("MasterEquation: H0 is not Hermitian");
    const double scale = std::max(hilbert::max_abs(sys.h0), 1.0);

    const Operator h0_w = frame_.to_working(sys.h0);
    Operator hs = h0_w;
    hs.diagonal() -= frame_.energies.cast<cplx>();
    hs = clean(hs, scale);
    has_static_ = hilbert::max_abs(hs) > 0.0;
    h_static_ = diss::WorkingOperator(hs);

    std::vector<DriveTerm> drive_w;
    for (const auto& term : sys.drive) {
        require_dim(term.op, d, "drive operator");
        if (!term.coefficient) throw InvalidInput("MasterEquation: drive term without coefficient");
        Operator op_w = clean(frame_.to_working(term.op), std::max(hilbert::max_abs(term.op), 1.0));
        drive_ops_.emplace_back(op_w);
        drive_coeff_.push_back(term.coefficient);
        drive_w.push_back({std::move(op_w), term.coefficient});
    }

    const bool needs_coupling = ds.kind == DissipatorKind::redfield_static || ds.kind == DissipatorKind::redfield_td;
    if (ds.kind == DissipatorKind::lindblad) {
        require_dim(sys.jump, d, "jump operator");
        if (!(ds.kappa >= 0.0)) throw InvalidInput("MasterEquation: kappa must be non-negative");
    }
    if (needs_coupling) require_dim(sys.coupling, d, "coupling operator");

    const bool driven = !sys.drive.empty();
    switch (ds.kind) {
        case DissipatorKind::none:
            break;
        case DissipatorKind::lindblad:
            kernel_ = std::make_unique<diss::LindbladKernel>(frame_.to_working(sys.jump), ds.kappa);
            break;
        case DissipatorKind::redfield_td:
            if (driven) {
                if (ds.spectrum.omega_c() > 0.0 && sys.drive_period > 0.0) {
                    adiabaticity_ = sys.drive_period * ds.spectrum.omega_c();
                }
                const Operator x_w = frame_.to_working(sys.coupling);
                if (ds.td_cache) {
                    if (ds.secular.active()) {
                        throw InvalidInput("MasterEquation: the rate-operator cache does not support secular filtering");
                    }
                    if (!(sys.drive_period > 0.0)) {
                        throw InvalidInput("MasterEquation: the rate-operator cache needs a periodic drive");
                    }
                    const WorkingHamiltonian wh(h0_w, drive_w);
                    kernel_ = std::make_unique<diss::TdRedfieldCacheKernel>(wh, x_w, ds.spectrum, sys.drive_period,
                                                                            ds.cache_samples);
                } else {
                    auto wh = std::make_shared<const WorkingHamiltonian>(h0_w, drive_w);
                    kernel_ = std::make_unique<diss::TdRedfieldKernel>(wh, x_w, ds.spectrum, ds.secular);
                }
                break;
            }
            [[fallthrough]];  // undriven: the instantaneous tensor is the static one
        case DissipatorKind::redfield_static: {
            const hilbert::EigSystem eig0 = hilbert::eigh(sys.h0);
            if (ds.secular.active()) {
                diss::RedfieldTensor tensor(eig0, sys.coupling, ds.spectrum, ds.secular);
                kernel_ = std::make_unique<diss::SuperoperatorKernel>(std::move(tensor),
                                                                      frame_.basis.adjoint() * eig0.vectors);
            } else {
                const Operator lambda = diss::rate_operator_in_basis(eig0, sys.coupling, ds.spectrum);
                kernel_ = std::make_unique<diss::RateOperatorKernel>(frame_.to_working(sys.coupling),
                                                                     frame_.to_working(lambda));
            }
            break;
        }
    }
    p_ = Operator::Ones(d, d);
}

void MasterEquation::working_state(double t, const Operator& y, Operator& rho_w) const {
    if (frame_.kind == FrameKind::lab) {
        rho_w = y;
        return;
    }
    Operator p;
    frame_.phases(t, p);
    rho_w = p.cwiseProduct(y);
}

Operator MasterEquation::lab_state(double t, const Operator& y) const {
    Operator rho_w;
    working_state(t, y, rho_w);
    return frame_.to_lab(rho_w);
}

void MasterEquation::rhs(double t, const Operator& y, Operator& dy) {
    ++rhs_evals_;
    const bool lab = frame_.kind == FrameKind::lab;
    if (lab) {
        rho_w_ = y;
    } else {
        frame_.phases(t, p_);
        rho_w_ = p_.cwiseProduct(y);
    }
    // -i[H, rho] = Z + Z^dagger with Z = -i H rho for Hermitian H and rho
    if (has_static_) {
        h_static_.left(rho_w_, z_);
    } else {
        z_.setZero(dim(), dim());
    }
    for (std::size_t k = 0; k < drive_ops_.size(); ++k) {
        const cplx c = drive_coeff_[k](t);
        drive_ops_[k].left(rho_w_, t_);
        z_ += c * t_;
    }
    z_ *= cplx(0.0, -1.0);
    out_ = z_;
    out_ += z_.adjoint();
    if (kernel_) kernel_->accumulate(t, rho_w_, out_);
    if (lab) {
        dy = out_;
    } else {
        dy = p_.conjugate().cwiseProduct(out_);
    }
}

// ------------------------------- propagation ---------------------------------

void validate(const PropagatorConfig& cfg) {
    if (!(cfg.rel_tol > 0.0) || !(cfg.abs_tol > 0.0)) throw InvalidInput("PropagatorConfig: tolerances must be positive");
    if (!(cfg.t_final > 0.0)) throw InvalidInput("PropagatorConfig: t_final must be positive");
    if (cfg.max_step < 0.0 || cfg.initial_step < 0.0) throw InvalidInput("PropagatorConfig: negative step bound");
    if (cfg.max_steps <= 0) throw InvalidInput("PropagatorConfig: max_steps must be positive");
}

const std::vector<double>& Trajectory::series(const std::string& name) const {
    const auto it = observables.find(name);
    if (it == observables.end()) throw InvalidInput("Trajectory: no observable named '" + name + "'");
    return it->second;
}

namespace {

// Dormand–Prince 5(4) tableau with Hairer's dense-output coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

// Step-size controller constants.
constexpr double kBeta = 0.04, kSafe = 0.9, kFacMin = 0.2, kFacMax = 10.0;

double scaled_rms(const Operator& v, const Operator& y0, const Operator& y1, double atol, double rtol) {
    const auto sk = atol + rtol * y0.array().abs().max(y1.array().abs());
    return std::sqrt((v.array().abs() / sk).square().mean());
}

class Recorder {
public:
    Recorder(const MasterEquation& eq, const OutputSpec& spec, const std::vector<double>& grid, Trajectory& traj)
        : eq_(eq), grid_(grid), traj_(traj), stride_(spec.min_eig_stride) {
        for (const auto& [name, op] : spec.observables) {
            if (op.rows() != eq.dim() || op.cols() != eq.dim()) {
                throw InvalidInput("propagate: observable '" + name + "' has the wrong dimension");
            }
            names_.push_back(name);
            ops_t_.push_back(eq.frame().to_working(op).transpose());
            traj_.observables[name].reserve(grid.size());
        }
        traj_.observables["trace"].reserve(grid.size());
        if (spec.top_fock.size() > 0) top_t_ = eq.frame().to_working(spec.top_fock).transpose();
        const int want = std::min({spec.max_snapshots, kMaxSnapshots, static_cast<int>(grid.size())});
        if (want == 1) snap_.push_back(grid.size() - 1);
        for (int i = 0; want > 1 && i < want; ++i) {
            snap_.push_back(static_cast<std::size_t>(std::llround(static_cast<double>(i) * (grid.size() - 1) / (want - 1))));
        }
        traj_.times.reserve(grid.size());
        traj_.min_eig_min = std::numeric_limits<double>::infinity();
    }

    void record(std::size_t idx, const Operator& y) {
        const double t = grid_[idx];
        eq_.working_state(t, y, rho_w_);
        const double tr = rho_w_.trace().real();
        if (std::abs(tr - 1.0) > kTraceTolerance) {
            std::ostringstream os;
            os << "integration failure: trace drifted to " << tr << " at t = " << t << " ns";
            throw NumericalError(os.str());
        }
        traj_.times.push_back(t);
        traj_.observables["trace"].push_back(tr);
        for (std::size_t k = 0; k < names_.size(); ++k) {
            traj_.observables[names_[k]].push_back((rho_w_.array() * ops_t_[k].array()).sum().real());
        }
        if (top_t_.size() > 0) {
            const double top = (rho_w_.array() * top_t_.array()).sum().real();
            traj_.max_top_population = std::max(traj_.max_top_population, top);
        }
        const bool last = idx + 1 == grid_.size();
        if (idx == 0 || last || (stride_ > 0 && idx % static_cast<std::size_t>(stride_) == 0)) {
            const Operator herm = 0.5 * (rho_w_ + rho_w_.adjoint());
            Eigen::SelfAdjointEigenSolver<Operator> es(herm, Eigen::EigenvaluesOnly);
            const double m = es.eigenvalues().minCoeff();
            traj_.min_eig_times.push_back(t);
            traj_.min_eig.push_back(m);
            traj_.min_eig_min = std::min(traj_.min_eig_min, m);
        }
        if (next_snap_ < snap_.size() && snap_[next_snap_] == idx) {
            while (next_snap_ < snap_.size() && snap_[next_snap_] == idx) ++next_snap_;
            traj_.state_times.push_back(t);
            traj_.states.push_back(eq_.frame().to_lab(rho_w_));
        }
    }

private:
    const MasterEquation& eq_;
    const std::vector<double>& grid_;
    Trajectory& traj_;
    int stride_;
    std::vector<std::string> names_;
    std::vector<Operator> ops_t_;
    Operator top_t_;
    std::vector<std::size_t> snap_;
    std::size_t next_snap_ = 0;
    Operator rho_w_;
};

void check_initial_state(const Operator& rho0, int dim) {
    if (rho0.rows() != dim || rho0.cols() != dim) throw InvalidInput("propagate: initial state has the wrong dimension");
    if (hilbert::max_abs(rho0 - rho0.adjoint()) > 1e-10) throw InvalidInput("propagate: initial state is not Hermitian");
    if (std::abs(rho0.trace() - 1.0) > 1e-8) throw InvalidInput("propagate: initial state trace is not one");
    Eigen::SelfAdjointEigenSolver<Operator> es(rho0, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10) throw InvalidInput("propagate: initial state is not positive semidefinite");
}

}  // namespace

Trajectory propagate(MasterEquation& eq, const Operator& rho0, const PropagatorConfig& cfg, const OutputSpec& out) {
    validate(cfg);
    const int dim = eq.dim();
    check_initial_state(rho0, dim);
    const double tf = cfg.t_final;

    std::vector<double> grid = out.times.empty() ? std::vector<double>{0.0, tf} : out.times;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] < 0.0 || grid[i] > tf * (1.0 + 1e-12)) throw InvalidInput("propagate: output time outside [0, t_final]");
        if (i > 0 && !(grid[i] > grid[i - 1])) throw InvalidInput("propagate: output times must be strictly increasing");
    }

    Trajectory traj;
    Recorder rec(eq, out, grid, traj);
    const long evals0 = eq.rhs_evaluations();

    Operator y = eq.initial_state(rho0);
    Operator k1(dim, dim), k2(dim, dim), k3(dim, dim), k4(dim, dim), k5(dim, dim), k6(dim, dim), k7(dim, dim);
    Operator ytmp(dim, dim), ynew(dim, dim), err(dim, dim);
    Operator r2, r3, r4, r5, yout;

    double t = 0.0;
    std::size_t next = 0;
    while (next < grid.size() && grid[next] <= t) rec.record(next++, y);
    eq.rhs(t, y, k1);

    const double hmax = cfg.max_step > 0.0 ? cfg.max_step : tf;
    double h = cfg.initial_step;
    if (h <= 0.0) {
        // Hairer's starting-step heuristic
        const Eigen::ArrayXXd sk = cfg.abs_tol + cfg.rel_tol * y.array().abs();
        const double dnf = (k1.array().abs() / sk).square().mean();
        const double dny = (y.array().abs() / sk).square().mean();
        h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * std::sqrt(dny / dnf);
        h = std::min(h, hmax);
        ytmp = y + h * k1;
        eq.rhs(t + h, ytmp, k2);
        const double der2 = std::sqrt(((k2 - k1).array().abs() / sk).square().mean()) / h;
        const double der12 = std::max(der2, std::sqrt(dnf));
        const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.2);
        h = std::min({100.0 * h, h1, hmax});
    }

    double errold = 1e-4;
    bool last_rejected = false;
    long steps = 0;
    while (t < tf) {
        if (++steps > cfg.max_steps) {
            std::ostringstream os;
            os << "propagate: exceeded " << cfg.max_steps << " steps at t = " << t << " ns";
            throw NumericalError(os.str());
        }
        h = std::min(h, hmax);
        if (t + h > tf || tf - (t + h) < 1e-12 * tf) h = tf - t;
        if (h < 1e-12 * std::max(1.0, t)) {
            std::ostringstream os;
            os << "step size underflow: h = " << h << " ns at t = " << t << " ns after " << traj.steps_accepted
               << " accepted and " << traj.steps_rejected << " rejected steps (problem too stiff for the explicit "
               << "integrator at rel_tol " << cfg.rel_tol << ")";
            throw StiffnessError(os.str());
        }

        ytmp = y + h * a21 * k1;
        eq.rhs(t + c2 * h, ytmp, k2);
        ytmp = y + h * (a31 * k1 + a32 * k2);
        eq.rhs(t + c3 * h, ytmp, k3);
        ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        eq.rhs(t + c4 * h, ytmp, k4);
        ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        eq.rhs(t + c5 * h, ytmp, k5);
        ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        eq.rhs(t + h, ytmp, k6);
        ynew = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        eq.rhs(t + h, ynew, k7);
        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double e = scaled_rms(err, y, ynew, cfg.abs_tol, cfg.rel_tol);
        if (!std::isfinite(e)) {
            throw NumericalError("propagate: non-finite error estimate at t = " + std::to_string(t) + " ns");
        }

        const double fac11 = std::pow(e, 0.2 - 0.75 * kBeta);
        if (e <= 1.0) {
            double fac = fac11 / std::pow(errold, kBeta);
            fac = std::clamp(fac / kSafe, 1.0 / kFacMax, 1.0 / kFacMin);
            double hnew = h / fac;
            if (last_rejected) hnew = std::min(hnew, h);
            errold = std::max(e, 1e-4);

            const double tnew = (h == tf - t) ? tf : t + h;
            if (next < grid.size() && grid[next] <= tnew) {
                r2 = ynew - y;
                r3 = h * k1 - r2;
                r4 = r2 - h * k7 - r3;
                r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
                while (next < grid.size() && grid[next] <= tnew) {
                    const double th = std::clamp((grid[next] - t) / h, 0.0, 1.0);
                    const double th1 = 1.0 - th;
                    yout = y + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
                    rec.record(next++, yout);
                }
            }
            y.swap(ynew);
            k1.swap(k7);
            t = tnew;
            h = hnew;
            last_rejected = false;
            ++traj.steps_accepted;
        } else {
            h /= std::min(1.0 / kFacMin, fac11 / kSafe);
            last_rejected = true;
            ++traj.steps_rejected;
        }
    }
    while (next < grid.size()) rec.record(next++, y);

    traj.rhs_evaluations = eq.rhs_evaluations() - evals0;
    traj.truncation_converged = traj.max_top_population <= kTruncationTolerance;
    return traj;
}

double period_average(const Trajectory& traj, const std::string& name, double period, int k) {
    if (!(period > 0.0) || k < 1) throw InvalidInput("period_average: invalid period window");
    const auto& y = traj.series(name);
    const auto& t = traj.times;
    if (t.empty()) throw InvalidInput("period_average: empty trajectory");
    const double b = t.back() - (k - 1) * period;
    const double a = b - period;
    const double slack = 1e-9 * std::max(1.0, t.back());
    if (a < t.front() - slack) throw InvalidInput("period_average: trajectory shorter than the requested window");
    double integral = 0.0;
    double t_lo = std::numeric_limits<double>::quiet_NaN(), t_hi = t_lo;
    int count = 0;
    for (std::size_t i = 1; i < t.size(); ++i) {
        if (t[i - 1] < a - slack || t[i] > b + slack) continue;
        integral += 0.5 * (y[i] + y[i - 1]) * (t[i] - t[i - 1]);
        if (count == 0) t_lo = t[i - 1];
        t_hi = t[i];
        ++count;
    }
    if (count < 2 || !(t_hi - t_lo > 0.5 * period)) {
        throw InvalidInput("period_average: too few samples inside one period (need a finer output grid)");
    }
    return integral / (t_hi - t_lo);
}

double steady_mean_photon(const Trajectory& traj, double drive_period, const std::string& name) {
    const double last = period_average(traj, name, drive_period, 1);
    const double prev = period_average(traj, name, drive_period, 2);
    const double drift = std::abs(last - prev);
    if (drift > 0.005 * std::abs(last) + 1e-9) {
        std::ostringstream os;
        os << "steady_mean_photon: not converged, period average changed by " << drift << " ("
           << (last != 0.0 ? 100.0 * drift / std::abs(last) : std::numeric_limits<double>::infinity())
           << "%) over the last period";
        throw NumericalError(os.str());
    }
    return last;
}

}  // namespace masterlab::dyn
