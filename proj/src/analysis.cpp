// analysis.cpp — Rate fitting, analytic rates and sweep orchestration.

#include "masterlab/analysis.hpp"

#include "masterlab/errors.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <thread>

namespace masterlab::analysis {

using hilbert::cplx;
using hilbert::Operator;

// ---------------------------------- fit --------------------------------------

namespace {

struct Model {
    const std::vector<double>& t;
    const std::vector<double>& y;
    double t0;

    // Residuals and Jacobian of A' exp(-gamma (t - t0)) + B - y.
    double evaluate(const Eigen::Vector3d& p, Eigen::VectorXd& r, Eigen::MatrixXd* jac) const {
        const auto n = static_cast<Eigen::Index>(t.size());
        r.resize(n);
        if (jac) jac->resize(n, 3);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double s = t[static_cast<std::size_t>(i)] - t0;
            const double e = std::exp(-p(1) * s);
            r(i) = p(0) * e + p(2) - y[static_cast<std::size_t>(i)];
            if (jac) {
                (*jac)(i, 0) = e;
                (*jac)(i, 1) = -p(0) * s * e;
                (*jac)(i, 2) = 1.0;
            }
        }
        return r.squaredNorm();
    }
};

}  // namespace

FitResult fit_exp_decay(const std::vector<double>& t, const std::vector<double>& y) {
    const std::size_t n = t.size();
    if (y.size() != n) throw InvalidInput("fit_exp_decay: t and y differ in length");
    if (n < static_cast<std::size_t>(kFitMinSamples)) {
        throw InvalidInput("fit_exp_decay: need at least " + std::to_string(kFitMinSamples) + " samples, got " +
                           std::to_string(n));
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (!(t[i] > t[i - 1])) throw InvalidInput("fit_exp_decay: times must be strictly increasing");
    }

    // Initial guess: B from the tail, A from the first sample, gamma from a
    // log-linear regression of y - B over the samples still well above the tail.
    const std::size_t tail = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(n))));
    const double b0 = std::accumulate(y.end() - static_cast<std::ptrdiff_t>(tail), y.end(), 0.0) / static_cast<double>(tail);
    const double a0 = y.front() - b0;
    if (a0 == 0.0) throw NumericalError("fit_exp_decay: no decay (first sample equals the tail level)");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = (y[i] - b0) / a0;
        if (z <= 0.1) continue;
        const double lz = std::log(z);
        sx += t[i];
        sy += lz;
        sxx += t[i] * t[i];
        sxy += t[i] * lz;
        ++m;
    }
    const double denom = m * sxx - sx * sx;
    if (m < 3 || !(denom > 0.0)) throw NumericalError("fit_exp_decay: too few decaying samples for the log-slope pre-fit");
    const double slope = (m * sxy - sx * sy) / denom;
    if (!(slope < 0.0)) {
        std::ostringstream os;
        os << "fit_exp_decay: no decay detected (log-slope pre-fit " << slope << " >= 0)";
        throw NumericalError(os.str());
    }
    const double g0 = -slope;
    const double span = g0 * (t.back() - t.front());
    if (span < kFitMinDecayConstants) {
        std::ostringstream os;
        os << "fit_exp_decay: data spans only " << span << " decay constants (need >= " << kFitMinDecayConstants << ")";
        throw InvalidInput(os.str());
    }

    const Model model{t, y, t.front()};
    Eigen::Vector3d p(a0, g0, b0);
    Eigen::VectorXd r, r_try;
    Eigen::MatrixXd jac;
    double cost = model.evaluate(p, r, &jac);
    const double y_scale = std::max(std::abs(a0), std::abs(b0));
    const double cost_floor = 1e-28 * static_cast<double>(n) * y_scale * y_scale;
    double lambda = 1e-3;
    int it = 0;
    bool converged = cost <= cost_floor;
    while (!converged && it < kFitMaxIterations) {
        ++it;
        const Eigen::Matrix3d jtj = jac.transpose() * jac;
        const Eigen::Vector3d grad = jac.transpose() * r;
        bool accepted = false;
        while (!accepted) {
            Eigen::Matrix3d lhs = jtj;
            lhs.diagonal() += lambda * jtj.diagonal();
            const Eigen::Vector3d step = lhs.ldlt().solve(-grad);
            const Eigen::Vector3d p_try = p + step;
            const double cost_try = model.evaluate(p_try, r_try, nullptr);
            if (std::isfinite(cost_try) && cost_try < cost) {
                const double rel_step = (step.array().abs() / (p.array().abs() + 1e-300)).maxCoeff();
                const double rel_drop = (cost - cost_try) / cost;
                p = p_try;
                cost = model.evaluate(p, r, &jac);
                lambda = std::max(lambda / 10.0, 1e-15);
                accepted = true;
                converged = rel_step < 1e-12 || rel_drop < 1e-14 || cost <= cost_floor;
            } else {
                lambda *= 10.0;
                if (lambda > 1e16) {
                    // No descent direction at working precision: stationary point.
                    accepted = true;
                    converged = true;
                }
            }
        }
    }
    if (!converged) {
        throw NumericalError("fit_exp_decay: Levenberg-Marquardt did not converge in " +
                             std::to_string(kFitMaxIterations) + " iterations");
    }
    if (!(p(1) > 0.0)) throw NumericalError("fit_exp_decay: fitted rate is not positive");
    // The pre-fit takes the tail as the asymptote and so overestimates slow
    // decays; repeat the span check with the fitted rate.
    if (const double fitted_span = p(1) * (t.back() - t.front()); fitted_span < kFitMinDecayConstants) {
        std::ostringstream os;
        os << "fit_exp_decay: data spans only " << fitted_span << " fitted decay constants (need >= "
           << kFitMinDecayConstants << ")";
        throw InvalidInput(os.str());
    }

    FitResult out;
    out.A = p(0) * std::exp(p(1) * model.t0);  // referred back to t = 0
    out.gamma = p(1);
    out.B = p(2);
    out.iterations = it;
    out.rms_residual = std::sqrt(cost / static_cast<double>(n));
    const double s2 = cost / static_cast<double>(n > 3 ? n - 3 : 1);
    const Eigen::Matrix3d jtj = jac.transpose() * jac;
    Eigen::FullPivLU<Eigen::Matrix3d> lu(jtj);
    if (lu.isInvertible()) {
        const Eigen::Matrix3d cov = s2 * lu.inverse();
        // var(A) at t = 0 from var(A') and var(gamma) to first order
        const double ea = std::exp(p(1) * model.t0);
        const double dA_dAp = ea, dA_dg = p(0) * model.t0 * ea;
        out.covariance_diag = {dA_dAp * dA_dAp * cov(0, 0) + 2 * dA_dAp * dA_dg * cov(0, 1) + dA_dg * dA_dg * cov(1, 1),
                               cov(1, 1), cov(2, 2)};
    }
    return out;
}

// ----------------------------- analytic rates --------------------------------

namespace {

double purcell_factor(double omega_q, double omega_r, double g) {
    if (std::abs(omega_q - omega_r) <= 1e-12 * std::abs(omega_r)) {
        throw NumericalError("Purcell rate: singular at omega_q = omega_r");
    }
    const double den = (omega_q - omega_r) * (omega_q + omega_r);
    const double f = 2.0 * omega_r * g / den;
    return f * f;
}

}  // namespace

double purcell_rate_analytic(const model::SystemParams& p, const env::SpectralDensity& j) {
    return j.eval(p.omega_q) * purcell_factor(p.omega_q, p.omega_r, p.g);
}

double lindblad_purcell_rate(const model::SystemParams& p) {
    const double delta = p.detuning();
    if (delta == 0.0) throw NumericalError("Lindblad Purcell rate: singular at zero detuning");
    return p.kappa * (p.g / delta) * (p.g / delta);
}

double br_lindblad_ratio(const model::SystemParams& p) {
    const double f = 2.0 * p.omega_r / (p.omega_r + p.omega_q);
    return f * f;
}

double stark_rate(const model::SystemParams& p, const env::SpectralDensity& j, double nbar) {
    const double wq = model::stark_shifted_freq(p, nbar);
    if (std::abs(wq - p.omega_r) <= 1e-12 * p.omega_r) {
        throw NumericalError("stark_rate: Stark-shifted qubit frequency coincides with the cavity");
    }
    return j.eval(wq) * purcell_factor(wq, p.omega_r, p.g);
}

double gain_from_traces(double gamma_base, double gamma_filtered) {
    if (!(gamma_base > 0.0) || !(gamma_filtered > 0.0)) throw InvalidInput("gain_from_traces: rates must be positive");
    return gamma_base / gamma_filtered;
}

// ------------------------------ measurements ---------------------------------

double nbar_to_amplitude(model::DriveKind kind, double kappa, double nbar) {
    if (nbar < 0.0) throw InvalidInput("nbar_to_amplitude: nbar must be non-negative");
    const double eps = 0.5 * kappa * std::sqrt(nbar);
    switch (kind) {
        case model::DriveKind::none: return 0.0;
        case model::DriveKind::rwa: return eps;
        case model::DriveKind::cosine: return 2.0 * eps;
    }
    return eps;
}

double amplitude_to_nbar(model::DriveKind kind, double kappa, double amplitude) {
    const double eps = kind == model::DriveKind::cosine ? 0.5 * amplitude : amplitude;
    if (kind == model::DriveKind::none) return 0.0;
    return 4.0 * eps * eps / (kappa * kappa);
}

int auto_truncation(double nbar) {
    const int n = static_cast<int>(std::ceil(nbar + 5.5 * std::sqrt(std::max(nbar, 0.0)) + 6.0));
    return std::clamp(n, 6, kMaxAutoTruncation);
}

env::SpectralDensity formula_spectrum(const RunSpec& spec) {
    if (spec.dissipator.kind == dyn::DissipatorKind::lindblad) return env::SpectralDensity::flat(spec.params.kappa);
    return spec.dissipator.spectrum;
}

namespace {

struct Prepared {
    model::SystemParams p;
    hilbert::QubitResonator ops;
    Operator h0;
    hilbert::EigSystem eig;
    int g0 = 0, e0 = 0;
};

Prepared prepare(const RunSpec& spec) {
    model::SystemParams p = spec.params;
    const bool driven = spec.drive_kind != model::DriveKind::none && p.drive_amp > 0.0;
    if (spec.auto_truncation) {
        p.n_trunc = auto_truncation(driven ? amplitude_to_nbar(spec.drive_kind, p.kappa, p.drive_amp) : 0.0);
    }
    model::validate(p);
    Prepared out{p, hilbert::QubitResonator(p.n_trunc), model::build_hamiltonian(p, spec.hamiltonian), {}, 0, 0};
    out.eig = hilbert::eigh(out.h0);
    const auto labels = model::dressed_labels(out.eig, p, std::min(6, out.ops.dim));
    out.g0 = model::find_label(labels, 'g', 0);
    out.e0 = model::find_label(labels, 'e', 0);
    return out;
}

double golden_rule(const RunSpec& spec, const Prepared& pr) {
    const Eigen::VectorXcd ve = pr.eig.vectors.col(pr.e0), vg = pr.eig.vectors.col(pr.g0);
    if (spec.dissipator.kind == dyn::DissipatorKind::lindblad) {
        return std::norm(vg.dot(pr.ops.a * ve)) * pr.p.kappa;
    }
    const double w = pr.eig.values(pr.e0) - pr.eig.values(pr.g0);
    return spec.dissipator.spectrum.eval(w) * std::norm(vg.dot(pr.ops.x * ve));
}

}  // namespace

double golden_rule_rate(const RunSpec& spec) { return golden_rule(spec, prepare(spec)); }

double ladder_rate(const RunSpec& spec, double nbar) {
    if (!(nbar >= 0.0)) throw InvalidInput("ladder_rate: nbar must be non-negative");
    model::SystemParams p = spec.params;
    const int n_max = static_cast<int>(std::ceil(nbar + 8.0 * std::sqrt(nbar) + 8.0));
    p.n_trunc = n_max + 16;  // headroom so the top of the used ladder is not truncation-distorted
    model::validate(p);
    const hilbert::QubitResonator ops(p.n_trunc);
    const hilbert::EigSystem eig = hilbert::eigh(model::build_hamiltonian(p, spec.hamiltonian));
    const auto labels = model::dressed_labels(eig, p, std::min(2 * n_max + 8, ops.dim));
    const bool lindblad = spec.dissipator.kind == dyn::DissipatorKind::lindblad;
    const Operator& c = lindblad ? ops.a : ops.x;

    double total = 0.0, weight = std::exp(-nbar);
    for (int n = 0; n <= n_max; ++n) {
        const int e = model::find_label(labels, 'e', n), g = model::find_label(labels, 'g', n);
        const Eigen::VectorXcd ve = eig.vectors.col(e), vg = eig.vectors.col(g);
        const double m2 = std::norm(vg.dot(c * ve));
        const double rate = lindblad ? p.kappa * m2 : spec.dissipator.spectrum.eval(eig.values(e) - eig.values(g)) * m2;
        total += weight * rate;
        weight *= nbar / (n + 1);
    }
    return total;
}

DecayOutcome run_decay(const RunSpec& spec) {
    const auto start = std::chrono::steady_clock::now();
    DecayOutcome res;
    const Prepared pr = prepare(spec);
    const model::SystemParams& p = pr.p;
    const bool driven = spec.drive_kind != model::DriveKind::none && p.drive_amp > 0.0;
    res.n_trunc = p.n_trunc;

    dyn::OpenSystem sys;
    sys.h0 = pr.h0;
    sys.jump = pr.ops.a;
    sys.coupling = pr.ops.x;
    if (driven) {
        if (!(p.omega_d > 0.0)) throw InvalidInput("run_decay: driven run needs a positive drive frequency");
        const double wd = p.omega_d, amp = p.drive_amp;
        if (spec.drive_kind == model::DriveKind::cosine) {
            sys.drive.push_back({pr.ops.x, [wd, amp](double t) { return cplx(amp * std::cos(wd * t), 0.0); }});
        } else {
            sys.drive.push_back({pr.ops.a, [wd, amp](double t) { return amp * std::polar(1.0, wd * t); }});
            sys.drive.push_back({Operator(pr.ops.a.adjoint()), [wd, amp](double t) { return amp * std::polar(1.0, -wd * t); }});
        }
        sys.drive_period = 2.0 * std::numbers::pi / wd;
    }
    res.drive_period = sys.drive_period;

    dyn::DissipatorSpec ds = spec.dissipator;
    if (ds.kind == dyn::DissipatorKind::lindblad) ds.kappa = p.kappa;

    const dyn::FrameKind fk = spec.frame.value_or(driven ? dyn::FrameKind::rotating : dyn::FrameKind::eigen);
    dyn::Frame frame = fk == dyn::FrameKind::lab        ? dyn::Frame::lab(pr.ops.dim)
                       : fk == dyn::FrameKind::rotating ? dyn::Frame::rotating(p.n_trunc, p.omega_q,
                                                                               driven ? p.omega_d : p.omega_r)
                                                        : dyn::Frame::eigen(pr.h0);

    // Run length: fit window start plus `decay_constants` estimated lifetimes.
    const double t_fit = driven ? 3.0 / p.kappa : 0.0;
    res.gamma_estimate = golden_rule(spec, pr);
    if (driven && ds.kind != dyn::DissipatorKind::lindblad) {
        const double nb = amplitude_to_nbar(spec.drive_kind, p.kappa, p.drive_amp);
        try {
            res.gamma_estimate = std::min(res.gamma_estimate, stark_rate(p, ds.spectrum, nb));
        } catch (const NumericalError&) {
        }
    }
    // Nothing to fit when the qubit has no decay channel, whatever the run length.
    if (!(res.gamma_estimate > 0.0)) {
        res.status = "no-decay: golden-rule rate is zero";
        return res;
    }
    dyn::PropagatorConfig pc = spec.propagation;
    if (pc.t_final <= 0.0) pc.t_final = t_fit + spec.decay_constants / res.gamma_estimate;
    if (driven) pc.t_final = std::ceil(pc.t_final / sys.drive_period - 1e-9) * sys.drive_period;
    res.t_final = pc.t_final;

    dyn::OutputSpec out;
    if (driven) {
        const long periods = std::lround(pc.t_final / sys.drive_period);
        const long samples = periods * spec.samples_per_period;
        out.times.resize(static_cast<std::size_t>(samples + 1));
        for (long i = 0; i <= samples; ++i) {
            out.times[static_cast<std::size_t>(i)] = sys.drive_period * static_cast<double>(i) / spec.samples_per_period;
        }
        out.times.back() = pc.t_final;
    } else {
        const int samples = std::max(spec.undriven_samples, kFitMinSamples);
        out.times.resize(static_cast<std::size_t>(samples));
        for (int i = 0; i < samples; ++i) out.times[static_cast<std::size_t>(i)] = pc.t_final * i / (samples - 1);
    }
    out.observables = {{"sigma_z", pr.ops.sz}, {"photon_number", pr.ops.n}};
    out.min_eig_stride = std::max<int>(1, static_cast<int>(out.times.size()) / std::max(spec.min_eig_samples, 1));
    out.max_snapshots = spec.max_snapshots;
    out.top_fock = pr.ops.top_fock;

    const Eigen::VectorXcd psi = pr.eig.vectors.col(pr.e0);
    const Operator rho0 = psi * psi.adjoint();

    try {
        dyn::MasterEquation eq(sys, ds, std::move(frame));
        res.adiabaticity_ratio = eq.adiabaticity_ratio();
        res.trajectory = dyn::propagate(eq, rho0, pc, out);
    } catch (const NumericalError& e) {
        res.status = e.what();
        res.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return res;
    }
    const dyn::Trajectory& tr = res.trajectory;
    res.truncation_converged = tr.truncation_converged;
    res.max_top_population = tr.max_top_population;
    res.min_eig_min = tr.min_eig_min;

    const double period = driven ? sys.drive_period : 2.0 * std::numbers::pi / p.omega_r;
    try {
        res.nbar = dyn::steady_mean_photon(tr, period);
        res.nbar_converged = true;
    } catch (const NumericalError&) {
        res.nbar = dyn::period_average(tr, "photon_number", period, 1);
        res.nbar_converged = false;
    } catch (const InvalidInput&) {
        res.nbar = tr.series("photon_number").back();
        res.nbar_converged = false;
    }

    const auto& sz = tr.series("sigma_z");
    const std::size_t stride = driven ? static_cast<std::size_t>(spec.samples_per_period) : 1;
    for (std::size_t i = 0; i < tr.times.size(); i += stride) {
        if (tr.times[i] + 1e-12 < t_fit) continue;
        res.fit_t.push_back(tr.times[i]);
        res.fit_y.push_back(sz[i]);
    }
    try {
        res.fit = fit_exp_decay(res.fit_t, res.fit_y);
        res.fit_ok = true;
    } catch (const std::exception& e) {
        res.status = std::string("fit failed: ") + e.what();
    }
    if (res.fit_ok) {
        res.gamma_down = res.fit.gamma;
        if (!driven) {
            const Eigen::VectorXcd ve = pr.eig.vectors.col(pr.e0), vg = pr.eig.vectors.col(pr.g0);
            const double s_e = ve.dot(pr.ops.sz * ve).real(), s_g = vg.dot(pr.ops.sz * vg).real();
            res.excited_steady = std::clamp((res.fit.B - s_g) / (s_e - s_g), 0.0, 1.0);
            res.gamma_down = res.fit.gamma * (1.0 - res.excited_steady);
        }
    }
    if (res.fit_ok && !res.truncation_converged) res.status = "ok (truncation not converged)";
    res.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

void parallel_for(int n, int jobs, const std::function<void(int)>& task) {
    jobs = std::clamp(jobs, 1, std::max(n, 1));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) task(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int w = 0; w < jobs; ++w) {
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) task(i);
        });
    }
    for (auto& th : pool) th.join();
}

std::vector<SweepRow> run_sweep(const RunSpec& base, const std::vector<double>& drive_grid, int jobs) {
    for (std::size_t i = 0; i < drive_grid.size(); ++i) {
        if (drive_grid[i] < 0.0) throw InvalidInput("run_sweep: drive amplitudes must be non-negative");
        if (i > 0 && !(drive_grid[i] > drive_grid[i - 1])) {
            throw InvalidInput("run_sweep: drive grid must be strictly increasing");
        }
    }
    std::vector<SweepRow> rows(drive_grid.size());
    parallel_for(static_cast<int>(drive_grid.size()), jobs, [&](int i) {
        SweepRow& row = rows[static_cast<std::size_t>(i)];
        row.drive_amp = drive_grid[static_cast<std::size_t>(i)];
        RunSpec spec = base;
        spec.params.drive_amp = row.drive_amp;
        try {
            const DecayOutcome r = run_decay(spec);
            row.nbar = r.nbar;
            row.nbar_converged = r.nbar_converged;
            row.n_trunc = r.n_trunc;
            row.truncation_converged = r.truncation_converged;
            row.min_eig = r.min_eig_min;
            row.runtime_s = r.runtime_s;
            row.status = r.status;
            if (r.fit_ok) {
                row.gamma1 = r.fit.gamma;
                row.fit_rms = r.fit.rms_residual;
            }
        } catch (const std::exception& e) {
            row.status = e.what();
        }
    });

    const env::SpectralDensity j = formula_spectrum(base);
    const double formula0 = stark_rate(base.params, j, 0.0);
    double gamma0 = purcell_rate_analytic(base.params, j);
    if (!rows.empty() && rows.front().drive_amp == 0.0 && rows.front().gamma1 > 0.0) gamma0 = rows.front().gamma1;
    for (auto& row : rows) {
        try {
            row.formula_gamma1 = stark_rate(base.params, j, std::max(row.nbar, 0.0));
            row.formula_over_formula0 = row.formula_gamma1 / formula0;
            row.ladder_gamma1 = ladder_rate(base, std::max(row.nbar, 0.0));
        } catch (const std::exception& e) {
            if (row.status == "ok") row.status = e.what();
        }
        row.gamma1_over_gamma0 = gamma0 > 0.0 ? row.gamma1 / gamma0 : 0.0;
    }
    return rows;
}

}  // namespace masterlab::analysis
