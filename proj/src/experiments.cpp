// experiments.cpp — Named experiments, tables and atomic output.

#include "masterlab/experiments.hpp"

#include "masterlab/dynamics.hpp"
#include "masterlab/errors.hpp"
#include "masterlab/hilbert.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace masterlab::experiments {

using nlohmann::json;
using hilbert::cplx;
using hilbert::Operator;

// ---------------------------------- table ------------------------------------

void Table::add_row(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw InvalidInput("Table::add_row: row width does not match the header");
    rows.push_back(std::move(row));
}

std::size_t Table::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw InvalidInput("Table: no column '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
}

double Table::number(std::size_t row, const std::string& name) const {
    const Cell& c = rows.at(row).at(column(name));
    if (const auto* d = std::get_if<double>(&c)) return *d;
    if (const auto* l = std::get_if<long>(&c)) return static_cast<double>(*l);
    throw InvalidInput("Table: column '" + name + "' is not numeric");
}

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (x == 0.0) return "0";  // also folds -0
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

std::string cell_text(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
    if (const auto* l = std::get_if<long>(&c)) return std::to_string(*l);
    return csv_field(std::get<std::string>(c));
}

}  // namespace

std::string to_csv(const Table& t) {
    std::ostringstream os;
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << cell_text(row[i]);
        os << '\n';
    }
    return os.str();
}

bool status_ok(const std::string& status) {
    return status.rfind("ok", 0) == 0 || status.rfind("no-decay", 0) == 0;
}

// --------------------------------- defaults ----------------------------------

config::ExperimentConfig resolve(config::ExperimentConfig c) {
    using config::Experiment;
    auto& sw = c.sweep;
    switch (c.experiment) {
        case Experiment::purcell_sweep:
            if (sw.kappa_ghz.empty()) sw.kappa_ghz = {0.05, 0.1, 0.2, 0.5, 1.0, 2.0};
            break;
        case Experiment::driven_sweep:
            break;  // a grid is mandatory
        case Experiment::cavity_bench:
            if (c.drive.amplitude_ghz == 0.0 && sw.nbar_targets.empty()) sw.nbar_targets = {4.0};
            break;
        case Experiment::filter_gain:
        case Experiment::rabi_vs_jc:
            break;
    }
    if (c.drive.kind != model::DriveKind::none && !c.drive.frequency_ghz) c.drive.frequency_ghz = c.omega_r_ghz;
    if (c.spectrum.kind == env::SpectrumKind::flat && !c.spectrum.level_ghz && c.experiment != Experiment::purcell_sweep) {
        c.spectrum.level_ghz = c.kappa_ghz;
    }
    if (c.spectrum.kind == env::SpectrumKind::ohmic && !c.spectrum.omega_c_ghz) c.spectrum.omega_c_ghz = 2.0 * c.omega_r_ghz;
    if (c.spectrum.filter && !c.spectrum.filter->omega_f_ghz) c.spectrum.filter->omega_f_ghz = c.omega_r_ghz;
    return c;
}

ExperimentResult run(const config::ExperimentConfig& c, int jobs) {
    switch (c.experiment) {
        case config::Experiment::purcell_sweep: return purcell_sweep(c, jobs);
        case config::Experiment::driven_sweep: return driven_sweep(c, jobs);
        case config::Experiment::cavity_bench: return cavity_bench(c, jobs);
        case config::Experiment::filter_gain: return filter_gain(c, jobs);
        case config::Experiment::rabi_vs_jc: return rabi_vs_jc(c, jobs);
    }
    throw InvalidInput("unknown experiment");
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double mean_abs_rel_error(const std::vector<double>& got, const std::vector<double>& want) {
    double sum = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        if (want[i] > 0.0 && got[i] > 0.0) {
            sum += std::abs(got[i] / want[i] - 1.0);
            ++n;
        }
    }
    return n ? sum / n : std::nan("");
}

/// Drive amplitudes (rad/ns) for a sweep: explicit GHz amplitudes or photon-number targets.
std::vector<double> drive_grid(const config::ExperimentConfig& c, const model::SystemParams& p) {
    std::vector<double> grid;
    if (!c.sweep.drive_amp_ghz.empty()) {
        for (double a : c.sweep.drive_amp_ghz) grid.push_back(config::ghz_to_rad(a));
    } else {
        for (double nb : c.sweep.nbar_targets) grid.push_back(analysis::nbar_to_amplitude(c.drive.kind, p.kappa, nb));
    }
    return grid;
}

/// SweepRow table shared by driven-sweep and the driven part of filter-gain.
Table sweep_table(const std::vector<analysis::SweepRow>& rows, const std::vector<double>& targets,
                  model::DriveKind kind, double kappa) {
    Table t;
    t.columns = {"drive_amp_ghz", "nbar_target", "nbar", "gamma1", "gamma1_over_gamma0", "formula_gamma1",
                 "formula_over_formula0", "ladder_gamma1", "rel_err_formula", "rel_err_ladder", "fit_rms",
                 "n_trunc", "nbar_converged", "truncation_converged", "min_eig", "status"};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        const double target = i < targets.size() ? targets[i] : analysis::amplitude_to_nbar(kind, kappa, r.drive_amp);
        const bool fitted = r.gamma1 > 0.0;
        t.add_row({r.drive_amp / (2.0 * std::numbers::pi), target, r.nbar, r.gamma1, r.gamma1_over_gamma0,
                   r.formula_gamma1, r.formula_over_formula0, r.ladder_gamma1,
                   fitted && r.formula_gamma1 > 0 ? r.gamma1 / r.formula_gamma1 - 1.0 : std::nan(""),
                   fitted && r.ladder_gamma1 > 0 ? r.gamma1 / r.ladder_gamma1 - 1.0 : std::nan(""), r.fit_rms,
                   static_cast<long>(r.n_trunc), static_cast<long>(r.nbar_converged),
                   static_cast<long>(r.truncation_converged), r.min_eig, r.status});
    }
    return t;
}

json sweep_report(const std::vector<analysis::SweepRow>& rows) {
    std::vector<double> fit, formula, ladder, norm_fit, norm_formula;
    json per_row = json::array();
    double total = 0.0;
    bool monotone = true;
    double max_norm = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        total += r.runtime_s;
        per_row.push_back({{"nbar", r.nbar}, {"runtime_s", r.runtime_s}, {"status", r.status}});
        if (!(r.gamma1 > 0.0)) continue;
        fit.push_back(r.gamma1);
        formula.push_back(r.formula_gamma1);
        ladder.push_back(r.ladder_gamma1);
        norm_fit.push_back(r.gamma1_over_gamma0);
        norm_formula.push_back(r.formula_over_formula0);
        if (fit.size() > 1 && fit.back() > fit[fit.size() - 2]) monotone = false;
        max_norm = std::max(max_norm, r.gamma1_over_gamma0);
    }
    return {{"mean_rel_error_formula", mean_abs_rel_error(fit, formula)},
            {"mean_rel_error_ladder", mean_abs_rel_error(fit, ladder)},
            {"mean_rel_error_normalized_formula", mean_abs_rel_error(norm_fit, norm_formula)},
            {"monotone_non_increasing", monotone},
            {"max_gamma1_over_gamma0", max_norm},
            {"total_runtime_s", total},
            {"rows", per_row}};
}

bool rows_ok(const std::vector<analysis::SweepRow>& rows) {
    return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return status_ok(r.status); });
}

std::string label_number(double x) {
    std::string s = format_number(x);
    std::replace(s.begin(), s.end(), '.', 'p');
    return s;
}

}  // namespace

// ------------------------------- purcell-sweep -------------------------------

ExperimentResult purcell_sweep(const config::ExperimentConfig& c, int jobs) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<double> kappas = c.sweep.kappa_ghz.empty() ? std::vector<double>{c.kappa_ghz} : c.sweep.kappa_ghz;
    const std::size_t n = kappas.size();
    std::vector<analysis::DecayOutcome> main(n), lind(n);
    std::vector<double> golden(n), formula(n), lindblad_formula(n);
    std::vector<std::string> errors(n);

    analysis::parallel_for(static_cast<int>(n), jobs, [&](int i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            analysis::RunSpec s = config::run_spec(c, kappas[k]);
            s.drive_kind = model::DriveKind::none;
            s.params.drive_amp = 0.0;
            golden[k] = analysis::golden_rule_rate(s);
            formula[k] = s.dissipator.kind == dyn::DissipatorKind::lindblad
                             ? analysis::lindblad_purcell_rate(s.params)
                             : analysis::purcell_rate_analytic(s.params, s.dissipator.spectrum);
            lindblad_formula[k] = analysis::lindblad_purcell_rate(s.params);
            main[k] = analysis::run_decay(s);
            if (s.dissipator.kind == dyn::DissipatorKind::lindblad) {
                lind[k] = main[k];
            } else {
                analysis::RunSpec sl = s;
                sl.dissipator.kind = dyn::DissipatorKind::lindblad;
                sl.dissipator.secular = diss::Secular::none();
                lind[k] = analysis::run_decay(sl);
            }
        } catch (const std::exception& e) {
            errors[k] = e.what();
        }
    });

    ExperimentResult res;
    Table t;
    t.columns = {"kappa_ghz", "kappa_over_g", "gamma_fit", "gamma_down", "gamma_formula", "gamma_golden",
                 "gamma_lindblad", "gamma_lindblad_down", "gamma_lindblad_formula", "ratio_br_over_lindblad",
                 "ratio_relaxation", "gamma_fit_over_kappa", "rel_err_formula", "fit_rms", "n_trunc", "status"};
    json rows = json::array();
    for (std::size_t k = 0; k < n; ++k) {
        const double kappa = config::ghz_to_rad(kappas[k]);
        std::string status = errors[k].empty() ? main[k].status : errors[k];
        if (errors[k].empty() && status_ok(status) && !status_ok(lind[k].status)) status = "lindblad: " + lind[k].status;
        if (!status_ok(status)) res.ok = false;
        const bool fitted = errors[k].empty() && main[k].fit_ok;
        const bool lfitted = errors[k].empty() && lind[k].fit_ok;
        const double g = fitted ? main[k].fit.gamma : 0.0, gd = fitted ? main[k].gamma_down : 0.0;
        const double gl = lfitted ? lind[k].fit.gamma : 0.0, gld = lfitted ? lind[k].gamma_down : 0.0;
        t.add_row({kappas[k], c.g_ghz > 0 ? kappas[k] / c.g_ghz : std::nan(""), g, gd, formula[k], golden[k], gl, gld,
                   lindblad_formula[k], gld > 0 && gd > 0 ? gd / gld : std::nan(""),
                   gl > 0 && g > 0 ? g / gl : std::nan(""), g / kappa,
                   g > 0 && formula[k] > 0 ? g / formula[k] - 1.0 : std::nan(""),
                   fitted ? main[k].fit.rms_residual : 0.0, static_cast<long>(main[k].n_trunc), status});
        rows.push_back({{"kappa_ghz", kappas[k]}, {"runtime_s", main[k].runtime_s + lind[k].runtime_s}});
    }
    res.curves.push_back({"", std::move(t)});
    res.report = {{"rows", rows}, {"total_runtime_s", seconds_since(start)}};
    return res;
}

// ------------------------------- driven-sweep --------------------------------

ExperimentResult driven_sweep(const config::ExperimentConfig& c, int jobs) {
    const auto start = std::chrono::steady_clock::now();
    const analysis::RunSpec base = config::run_spec(c, c.kappa_ghz);
    const std::vector<double> grid = drive_grid(c, base.params);
    const auto rows = analysis::run_sweep(base, grid, jobs);

    ExperimentResult res;
    res.curves.push_back({"", sweep_table(rows, c.sweep.nbar_targets, c.drive.kind, base.params.kappa)});
    res.report = sweep_report(rows);
    res.report["wall_time_s"] = seconds_since(start);
    res.ok = rows_ok(rows);
    return res;
}

// ------------------------------- cavity-bench --------------------------------

double cavity_analytic_nbar(model::DriveKind kind, double kappa, double amplitude) {
    return analysis::amplitude_to_nbar(kind, kappa, amplitude);
}

std::vector<CavityTrace> run_cavity_bench(const CavitySpec& spec, int jobs) {
    model::SystemParams p = spec.params;
    p.g = 0.0;
    model::validate(p);
    if (!(p.kappa > 0.0)) throw InvalidInput("cavity bench: kappa must be positive");
    if (!(p.omega_d > 0.0)) throw InvalidInput("cavity bench: drive frequency must be positive");
    if (spec.samples_per_period < 2) throw InvalidInput("cavity bench: need at least 2 samples per period");

    const hilbert::QubitResonator ops(p.n_trunc);
    dyn::OpenSystem sys;
    sys.h0 = model::build_rabi(p);
    sys.jump = ops.a;
    sys.coupling = ops.x;
    const double wd = p.omega_d, amp = p.drive_amp;
    if (amp > 0.0) {
        if (spec.drive_kind == model::DriveKind::cosine) {
            sys.drive.push_back({ops.x, [wd, amp](double t) { return cplx(amp * std::cos(wd * t), 0.0); }});
        } else if (spec.drive_kind == model::DriveKind::rwa) {
            sys.drive.push_back({ops.a, [wd, amp](double t) { return amp * std::polar(1.0, wd * t); }});
            sys.drive.push_back({Operator(ops.a.adjoint()), [wd, amp](double t) { return amp * std::polar(1.0, -wd * t); }});
        }
    }
    const double period = 2.0 * std::numbers::pi / wd;
    sys.drive_period = sys.drive.empty() ? 0.0 : period;

    dyn::PropagatorConfig pc;
    pc.rel_tol = spec.rel_tol;
    pc.abs_tol = spec.abs_tol;
    pc.t_final = spec.t_final > 0.0 ? spec.t_final : 20.0 / p.kappa;
    pc.t_final = std::ceil(pc.t_final / period - 1e-9) * period;

    dyn::OutputSpec out;
    const long samples = std::lround(pc.t_final / period) * spec.samples_per_period;
    out.times.resize(static_cast<std::size_t>(samples + 1));
    for (long i = 0; i <= samples; ++i) out.times[static_cast<std::size_t>(i)] = period * static_cast<double>(i) / spec.samples_per_period;
    out.times.back() = pc.t_final;
    out.observables = {{"photon_number", ops.n}};
    out.top_fock = ops.top_fock;

    Operator rho0 = Operator::Zero(ops.dim, ops.dim);
    const int g0 = ops.index('g', 0);
    rho0(g0, g0) = 1.0;

    std::vector<CavityTrace> traces(3);
    traces[0].label = "lindblad";
    traces[1].label = "redfield-nonsecular";
    traces[2].label = "redfield-full-secular";
    analysis::parallel_for(3, jobs, [&](int i) {
        CavityTrace& tr = traces[static_cast<std::size_t>(i)];
        const auto t0 = std::chrono::steady_clock::now();
        dyn::DissipatorSpec ds;
        ds.kappa = p.kappa;
        ds.spectrum = spec.spectrum;
        ds.kind = i == 0 ? dyn::DissipatorKind::lindblad : dyn::DissipatorKind::redfield_static;
        ds.secular = i == 2 ? diss::Secular::full() : diss::Secular::none();
        try {
            dyn::MasterEquation eq(sys, ds, dyn::Frame::rotating(p.n_trunc, p.omega_q, wd));
            const dyn::Trajectory traj = dyn::propagate(eq, rho0, pc, out);
            tr.times = traj.times;
            tr.nbar = traj.series("photon_number");
            tr.steady_nbar = dyn::period_average(traj, "photon_number", period, 1);
            if (!traj.truncation_converged) tr.status = "ok (truncation not converged)";
        } catch (const NumericalError& e) {
            tr.status = e.what();
        }
        tr.runtime_s = seconds_since(t0);
    });
    return traces;
}

ExperimentResult cavity_bench(const config::ExperimentConfig& c, int jobs) {
    CavitySpec spec;
    spec.params = config::system_params(c, c.kappa_ghz);
    spec.drive_kind = c.drive.kind;
    if (!c.sweep.nbar_targets.empty()) {
        spec.params.drive_amp = analysis::nbar_to_amplitude(c.drive.kind, spec.params.kappa, c.sweep.nbar_targets.front());
    }
    const double analytic = cavity_analytic_nbar(c.drive.kind, spec.params.kappa, spec.params.drive_amp);
    if (c.n_trunc == 0) spec.params.n_trunc = analysis::auto_truncation(analytic);
    spec.spectrum = config::build_spectrum(c, spec.params);
    spec.t_final = c.propagation.t_final_ns;
    spec.samples_per_period = c.propagation.samples_per_period;
    spec.rel_tol = c.propagation.rel_tol;
    spec.abs_tol = c.propagation.abs_tol;
    const auto traces = run_cavity_bench(spec, jobs);

    ExperimentResult res;
    Table t;
    t.columns = {"t_ns", "kappa_t", "nbar_lindblad", "nbar_redfield_nonsecular", "nbar_redfield_full_secular",
                 "nbar_analytic"};
    const bool all_ran = std::all_of(traces.begin(), traces.end(), [](const CavityTrace& tr) { return !tr.times.empty(); });
    if (all_ran) {
        for (std::size_t i = 0; i < traces[0].times.size(); ++i) {
            const double tt = traces[0].times[i];
            t.add_row({tt, spec.params.kappa * tt, traces[0].nbar[i], traces[1].nbar[i], traces[2].nbar[i], analytic});
        }
    }
    res.curves.push_back({"", std::move(t)});
    json runs = json::array();
    for (const auto& tr : traces) {
        if (!status_ok(tr.status)) res.ok = false;
        runs.push_back({{"dissipator", tr.label},
                        {"status", tr.status},
                        {"steady_nbar", tr.steady_nbar},
                        {"rel_dev_from_analytic", analytic > 0 ? tr.steady_nbar / analytic - 1.0 : 0.0},
                        {"runtime_s", tr.runtime_s}});
    }
    res.report = {{"nbar_analytic", analytic}, {"n_trunc", spec.params.n_trunc}, {"runs", runs}};
    return res;
}

// -------------------------------- filter-gain --------------------------------

ExperimentResult filter_gain(const config::ExperimentConfig& c, int jobs) {
    const model::SystemParams p = config::system_params(c, c.kappa_ghz);
    const env::SpectralDensity base = config::build_base_spectrum(c, p);
    const double wf = config::ghz_to_rad(c.spectrum.filter && c.spectrum.filter->omega_f_ghz ? *c.spectrum.filter->omega_f_ghz
                                                                                             : c.omega_r_ghz);
    std::vector<double> widths = c.sweep.filter_gamma_ghz;
    if (widths.empty()) widths.push_back(c.spectrum.filter->gamma_f_ghz);

    // Spectrum 0 is the unfiltered base, then one per filter width.
    std::vector<env::SpectralDensity> spectra{base};
    for (double w : widths) spectra.push_back(env::compose(base, {wf, config::ghz_to_rad(w)}));
    const std::size_t n = spectra.size();

    std::vector<analysis::DecayOutcome> runs(n);
    std::vector<std::string> errors(n);
    analysis::parallel_for(static_cast<int>(n), jobs, [&](int i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            analysis::RunSpec s = config::run_spec(c, c.kappa_ghz);
            s.drive_kind = model::DriveKind::none;
            s.params.drive_amp = 0.0;
            s.dissipator.spectrum = spectra[k];
            runs[k] = analysis::run_decay(s);
        } catch (const std::exception& e) {
            errors[k] = e.what();
        }
    });

    ExperimentResult res;
    auto status_of = [&](std::size_t k) { return errors[k].empty() ? runs[k].status : errors[k]; };
    auto rate_of = [&](std::size_t k) { return errors[k].empty() && runs[k].fit_ok ? runs[k].fit.gamma : 0.0; };

    Table gains;
    gains.columns = {"gamma_f_ghz", "omega_f_ghz", "gamma_base", "gamma_filtered", "gain_fit", "gain_formula", "status"};
    json gain_report = json::array();
    for (std::size_t k = 1; k < n; ++k) {
        std::string status = status_of(k);
        if (status_ok(status) && !status_ok(status_of(0))) status = "base: " + status_of(0);
        if (!status_ok(status)) res.ok = false;
        const double g0 = rate_of(0), gk = rate_of(k);
        const double fitted = g0 > 0 && gk > 0 ? analysis::gain_from_traces(g0, gk) : std::nan("");
        const double formula = env::t1_gain(base, spectra[k], p.omega_q);
        gains.add_row({widths[k - 1], wf / (2.0 * std::numbers::pi), g0, gk, fitted, formula, status});
        gain_report.push_back({{"gamma_f_ghz", widths[k - 1]},
                               {"gain_fit", fitted},
                               {"gain_formula", formula},
                               {"rel_dev", fitted / formula - 1.0}});
    }
    res.curves.push_back({"", std::move(gains)});

    // sigma_z traces, one file per run.
    for (std::size_t k = 0; k < n; ++k) {
        if (!errors[k].empty() || runs[k].trajectory.times.empty()) continue;
        Table tr;
        tr.columns = {"t_ns", "sigma_z", "fit"};
        const auto& traj = runs[k].trajectory;
        const auto& sz = traj.series("sigma_z");
        const auto& f = runs[k].fit;
        for (std::size_t i = 0; i < traj.times.size(); ++i) {
            const double model_value = runs[k].fit_ok ? f.A * std::exp(-f.gamma * traj.times[i]) + f.B : std::nan("");
            tr.add_row({traj.times[i], sz[i], model_value});
        }
        res.curves.push_back({k == 0 ? "trace_base" : "trace_gf" + label_number(widths[k - 1]), std::move(tr)});
    }

    // Optional driven sweep with every spectrum.
    const bool driven = !c.sweep.nbar_targets.empty() || !c.sweep.drive_amp_ghz.empty();
    json sweeps = json::array();
    if (driven) {
        for (std::size_t k = 0; k < n; ++k) {
            analysis::RunSpec s = config::run_spec(c, c.kappa_ghz);
            s.dissipator.spectrum = spectra[k];
            const auto rows = analysis::run_sweep(s, drive_grid(c, s.params), jobs);
            if (!rows_ok(rows)) res.ok = false;
            res.curves.push_back({k == 0 ? "sweep_base" : "sweep_gf" + label_number(widths[k - 1]),
                                  sweep_table(rows, c.sweep.nbar_targets, c.drive.kind, s.params.kappa)});
            json rep = sweep_report(rows);
            rep["spectrum"] = spectra[k].describe();
            sweeps.push_back(rep);
        }
    }

    json run_report = json::array();
    for (std::size_t k = 0; k < n; ++k) {
        run_report.push_back({{"spectrum", spectra[k].describe()},
                              {"status", status_of(k)},
                              {"gamma", rate_of(k)},
                              {"runtime_s", runs[k].runtime_s}});
    }
    res.report = {{"gains", gain_report}, {"runs", run_report}};
    if (driven) res.report["sweeps"] = sweeps;
    return res;
}

// -------------------------------- rabi-vs-jc ---------------------------------

ExperimentResult rabi_vs_jc(const config::ExperimentConfig& c, int jobs) {
    struct Case {
        model::HamiltonianKind h;
        dyn::DissipatorKind d;
    };
    const std::vector<Case> cases = {{model::HamiltonianKind::rabi, dyn::DissipatorKind::lindblad},
                                     {model::HamiltonianKind::jc, dyn::DissipatorKind::lindblad},
                                     {model::HamiltonianKind::rabi, dyn::DissipatorKind::redfield_static},
                                     {model::HamiltonianKind::jc, dyn::DissipatorKind::redfield_static}};
    std::vector<analysis::DecayOutcome> runs(cases.size());
    std::vector<double> golden(cases.size());
    std::vector<std::string> errors(cases.size());
    analysis::parallel_for(static_cast<int>(cases.size()), jobs, [&](int i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            analysis::RunSpec s = config::run_spec(c, c.kappa_ghz);
            s.drive_kind = model::DriveKind::none;
            s.params.drive_amp = 0.0;
            s.hamiltonian = cases[k].h;
            s.dissipator.kind = cases[k].d;
            s.dissipator.secular = diss::Secular::none();
            golden[k] = analysis::golden_rule_rate(s);
            runs[k] = analysis::run_decay(s);
        } catch (const std::exception& e) {
            errors[k] = e.what();
        }
    });

    ExperimentResult res;
    Table t;
    t.columns = {"hamiltonian", "dissipator", "gamma_fit", "gamma_down", "gamma_golden", "fit_rms", "status"};
    std::vector<double> rate(cases.size(), 0.0), down(cases.size(), 0.0);
    for (std::size_t k = 0; k < cases.size(); ++k) {
        const std::string status = errors[k].empty() ? runs[k].status : errors[k];
        if (!status_ok(status)) res.ok = false;
        rate[k] = errors[k].empty() && runs[k].fit_ok ? runs[k].fit.gamma : 0.0;
        down[k] = errors[k].empty() && runs[k].fit_ok ? runs[k].gamma_down : 0.0;
        t.add_row({model::to_string(cases[k].h), dyn::to_string(cases[k].d), rate[k], down[k], golden[k],
                   errors[k].empty() && runs[k].fit_ok ? runs[k].fit.rms_residual : 0.0, status});
    }
    res.curves.push_back({"", std::move(t)});

    const model::SystemParams p = config::system_params(c, c.kappa_ghz);
    // Purcell (downward) rates are the compared quantity; the raw relaxation
    // rates are reported alongside because Lindblad with a Rabi Hamiltonian
    // adds a spurious upward channel that the relaxation rate includes.
    const double lind_diff = down[0] > 0 ? std::abs(down[1] - down[0]) / down[0] : std::nan("");
    const double lind_diff_relax = rate[0] > 0 ? std::abs(rate[1] - rate[0]) / rate[0] : std::nan("");
    const double br_ratio = down[3] > 0 ? down[2] / down[3] : std::nan("");
    const double expected = analysis::br_lindblad_ratio(p);
    res.report = {{"lindblad_rel_diff", lind_diff},
                  {"lindblad_rel_diff_relaxation", lind_diff_relax},
                  {"lindblad_rates_coincide", lind_diff < 0.01},
                  {"br_rabi_over_jc", br_ratio},
                  {"br_ratio_expected", expected},
                  {"br_ratio_rel_dev", br_ratio / expected - 1.0},
                  {"br_rates_differ", std::abs(br_ratio - 1.0) > 0.01}};
    return res;
}

// ---------------------------------- output -----------------------------------

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
    namespace fs = std::filesystem;
    const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
        os << contents;
        os.flush();
        if (!os) throw std::runtime_error("failed writing '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw std::runtime_error("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
    }
}

std::vector<std::filesystem::path> write_outputs(const std::filesystem::path& dir, const config::ExperimentConfig& c,
                                                 const ExperimentResult& r) {
    std::filesystem::create_directories(dir);
    const std::string stem = config::to_string(c.experiment) + "_" + c.tag;
    std::vector<std::filesystem::path> written;
    for (const auto& curve : r.curves) {
        const auto path = dir / (stem + (curve.suffix.empty() ? "" : "_" + curve.suffix) + ".csv");
        write_atomic(path, to_csv(curve.table));
        written.push_back(path);
    }
    const auto echo = dir / (stem + ".config.json");
    write_atomic(echo, config::to_json(c).dump(2) + "\n");
    written.push_back(echo);
    json report = r.report;
    report["experiment"] = config::to_string(c.experiment);
    report["tag"] = c.tag;
    report["ok"] = r.ok;
    const auto rep = dir / (stem + ".report.json");
    write_atomic(rep, report.dump(2) + "\n");
    written.push_back(rep);
    return written;
}

}  // namespace masterlab::experiments
