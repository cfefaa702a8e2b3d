// config.cpp — Strict JSON parsing, echo and run-spec construction.

#include "masterlab/config.hpp"

#include "masterlab/errors.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace masterlab::config {

using nlohmann::json;

std::string to_string(Experiment e) {
    switch (e) {
        case Experiment::purcell_sweep: return "purcell-sweep";
        case Experiment::driven_sweep: return "driven-sweep";
        case Experiment::cavity_bench: return "cavity-bench";
        case Experiment::filter_gain: return "filter-gain";
        case Experiment::rabi_vs_jc: return "rabi-vs-jc";
    }
    return "?";
}

Experiment experiment_from_string(const std::string& s) {
    for (auto e : {Experiment::purcell_sweep, Experiment::driven_sweep, Experiment::cavity_bench,
                   Experiment::filter_gain, Experiment::rabi_vs_jc}) {
        if (to_string(e) == s) return e;
    }
    throw ConfigError("unknown experiment '" + s +
                      "' (expected purcell-sweep, driven-sweep, cavity-bench, filter-gain or rabi-vs-jc)");
}

double ghz_to_rad(double ghz) { return 2.0 * std::numbers::pi * ghz; }

namespace {

// Reads one JSON object, tracking which keys were consumed so that leftovers
// can be reported as unknown.
class Reader {
public:
    Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ConfigError(where_ + ": expected a JSON object");
    }

    bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    double number(const std::string& key, double fallback) {
        seen_.insert(key);
        return has(key) ? as_number(key) : fallback;
    }

    double required_number(const std::string& key) {
        seen_.insert(key);
        if (!has(key)) throw ConfigError(path(key) + ": required");
        return as_number(key);
    }

    std::optional<double> optional_number(const std::string& key) {
        seen_.insert(key);
        if (!has(key)) return std::nullopt;
        return as_number(key);
    }

    long integer(const std::string& key, long fallback) {
        seen_.insert(key);
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_number_integer()) throw ConfigError(path(key) + ": expected an integer");
        return v.get<long>();
    }

    bool boolean(const std::string& key, bool fallback) {
        seen_.insert(key);
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_boolean()) throw ConfigError(path(key) + ": expected true or false");
        return v.get<bool>();
    }

    std::string string(const std::string& key, const std::string& fallback) {
        seen_.insert(key);
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_string()) throw ConfigError(path(key) + ": expected a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(const std::string& key) {
        seen_.insert(key);
        if (!has(key)) return {};
        const json& v = j_.at(key);
        if (!v.is_array()) throw ConfigError(path(key) + ": expected an array of numbers");
        std::vector<double> out;
        for (const auto& x : v) {
            if (!x.is_number()) throw ConfigError(path(key) + ": expected an array of numbers");
            out.push_back(x.get<double>());
        }
        return out;
    }

    std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError(path(it.key()) + ": unknown key");
        }
    }

private:
    double as_number(const std::string& key) const {
        const json& v = j_.at(key);
        if (!v.is_number()) throw ConfigError(path(key) + ": expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ConfigError(path(key) + ": must be finite");
        return x;
    }

    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

template <typename F>
auto translate(F&& f, const std::string& where) -> decltype(f()) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidInput& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

void check_grid(const std::vector<double>& v, const std::string& name, bool allow_zero) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        require(allow_zero ? v[i] >= 0.0 : v[i] > 0.0, name + ": values must be " + (allow_zero ? "non-negative" : "positive"));
        require(i == 0 || v[i] > v[i - 1], name + ": values must be strictly increasing");
    }
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
    ExperimentConfig c;
    Reader top(j, "");
    require(top.has("experiment"), "experiment: required");
    c.experiment = experiment_from_string(top.string("experiment", ""));
    c.tag = top.string("tag", c.tag);
    require(!c.tag.empty() && c.tag.find_first_of("/\\ ") == std::string::npos,
            "tag: must be non-empty and contain no spaces or path separators");
    c.output_dir = top.string("output_dir", "");
    const long seed = top.integer("seed", 0);
    require(seed >= 0, "seed: must be non-negative");
    c.seed = static_cast<std::uint64_t>(seed);
    c.hamiltonian = [&] {
        const std::string h = top.string("hamiltonian", "rabi");
        if (h == "rabi") return model::HamiltonianKind::rabi;
        if (h == "jc") return model::HamiltonianKind::jc;
        throw ConfigError("hamiltonian: expected 'rabi' or 'jc'");
    }();
    c.dissipator = translate([&] { return dyn::dissipator_kind_from_string(top.string("dissipator", "redfield-static")); },
                             "dissipator");
    require(c.dissipator != dyn::DissipatorKind::none, "dissipator: 'none' is not an experiment dissipator");

    {
        require(top.has("system"), "system: required");
        Reader s(top.raw("system"), "system");
        c.omega_q_ghz = s.required_number("omega_q_ghz");
        c.omega_r_ghz = s.required_number("omega_r_ghz");
        c.g_ghz = s.required_number("g_ghz");
        c.kappa_ghz = s.required_number("kappa_ghz");
        if (s.has("n_trunc")) {
            const json& n = s.raw("n_trunc");
            if (n.is_string() && n.get<std::string>() == "auto") {
                c.n_trunc = 0;
            } else if (n.is_number_integer() && n.get<long>() >= 2 && n.get<long>() <= 200) {
                c.n_trunc = static_cast<int>(n.get<long>());
            } else {
                throw ConfigError("system.n_trunc: expected an integer in [2, 200] or \"auto\"");
            }
        }
        s.finish();
        require(c.omega_q_ghz > 0 && c.omega_r_ghz > 0, "system: omega_q_ghz and omega_r_ghz must be positive");
        require(c.g_ghz >= 0, "system.g_ghz: must be non-negative");
        require(c.kappa_ghz > 0, "system.kappa_ghz: must be positive");
    }

    if (top.has("spectrum")) {
        Reader s(top.raw("spectrum"), "spectrum");
        const std::string kind = s.string("kind", "flat");
        if (kind == "flat") c.spectrum.kind = env::SpectrumKind::flat;
        else if (kind == "ohmic") c.spectrum.kind = env::SpectrumKind::ohmic;
        else throw ConfigError("spectrum.kind: expected 'flat' or 'ohmic'");
        c.spectrum.level_ghz = s.optional_number("level_ghz");
        c.spectrum.omega_c_ghz = s.optional_number("omega_c_ghz");
        if (s.has("filter")) {
            Reader f(s.raw("filter"), "spectrum.filter");
            FilterConfig fc;
            fc.omega_f_ghz = f.optional_number("omega_f_ghz");
            fc.gamma_f_ghz = f.required_number("gamma_f_ghz");
            f.finish();
            require(fc.gamma_f_ghz > 0, "spectrum.filter.gamma_f_ghz: must be positive");
            require(!fc.omega_f_ghz || *fc.omega_f_ghz > 0, "spectrum.filter.omega_f_ghz: must be positive");
            c.spectrum.filter = fc;
        } else if (top.raw("spectrum").contains("filter")) {
            s.raw("filter");  // explicit null
        }
        s.finish();
        require(!c.spectrum.level_ghz || *c.spectrum.level_ghz >= 0, "spectrum.level_ghz: must be non-negative");
        require(!c.spectrum.omega_c_ghz || *c.spectrum.omega_c_ghz >= c.omega_r_ghz,
                "spectrum.omega_c_ghz: cutoff must not lie below the cavity frequency");
        require(!(c.spectrum.kind == env::SpectrumKind::flat && c.spectrum.omega_c_ghz),
                "spectrum.omega_c_ghz: only meaningful for an ohmic spectrum");
        require(!(c.spectrum.kind == env::SpectrumKind::ohmic && c.spectrum.level_ghz),
                "spectrum.level_ghz: only meaningful for a flat spectrum");
    }

    if (top.has("drive")) {
        Reader d(top.raw("drive"), "drive");
        c.drive.kind = translate([&] { return model::drive_kind_from_string(d.string("kind", "none")); }, "drive.kind");
        c.drive.amplitude_ghz = d.number("amplitude_ghz", 0.0);
        c.drive.frequency_ghz = d.optional_number("frequency_ghz");
        d.finish();
        require(c.drive.amplitude_ghz >= 0, "drive.amplitude_ghz: must be non-negative");
        require(!(c.drive.kind == model::DriveKind::none && c.drive.amplitude_ghz != 0.0),
                "drive: kind 'none' requires zero amplitude");
        require(!c.drive.frequency_ghz || *c.drive.frequency_ghz > 0, "drive.frequency_ghz: must be positive");
    }

    if (top.has("secular")) {
        const json& sj = top.raw("secular");
        if (sj.is_string()) {
            const std::string m = sj.get<std::string>();
            if (m == "full") c.secular.mode = diss::Secular::Mode::full;
            else if (m == "none") c.secular.mode = diss::Secular::Mode::none;
            else throw ConfigError("secular: expected null, \"none\", \"full\" or {\"omega_sec_ghz\": x}");
        } else {
            Reader s(sj, "secular");
            c.secular.mode = diss::Secular::Mode::cutoff;
            c.secular.omega_sec_ghz = s.required_number("omega_sec_ghz");
            s.finish();
            require(c.secular.omega_sec_ghz > 0, "secular.omega_sec_ghz: must be positive");
        }
    } else if (j.contains("secular")) {
        top.raw("secular");
    }

    if (top.has("propagation")) {
        Reader p(top.raw("propagation"), "propagation");
        auto& pc = c.propagation;
        pc.rel_tol = p.number("rel_tol", pc.rel_tol);
        pc.abs_tol = p.number("abs_tol", pc.abs_tol);
        pc.max_step_ns = p.number("max_step_ns", pc.max_step_ns);
        pc.t_final_ns = p.number("t_final_ns", pc.t_final_ns);
        const std::string frame = p.string("frame", "auto");
        if (frame != "auto") pc.frame = translate([&] { return dyn::frame_kind_from_string(frame); }, "propagation.frame");
        pc.td_cache = p.boolean("td_cache", pc.td_cache);
        pc.cache_samples = static_cast<int>(p.integer("cache_samples", pc.cache_samples));
        pc.decay_constants = p.number("decay_constants", pc.decay_constants);
        pc.samples_per_period = static_cast<int>(p.integer("samples_per_period", pc.samples_per_period));
        pc.undriven_samples = static_cast<int>(p.integer("undriven_samples", pc.undriven_samples));
        p.finish();
        require(pc.rel_tol > 0 && pc.abs_tol > 0, "propagation: tolerances must be positive");
        require(pc.max_step_ns >= 0 && pc.t_final_ns >= 0, "propagation: max_step_ns and t_final_ns must be non-negative");
        require(pc.cache_samples >= 2, "propagation.cache_samples: must be at least 2");
        require(pc.decay_constants >= analysis::kFitMinDecayConstants,
                "propagation.decay_constants: must be at least 2 (fit window)");
        require(pc.samples_per_period >= 40, "propagation.samples_per_period: must be at least 40");
        require(pc.undriven_samples >= analysis::kFitMinSamples, "propagation.undriven_samples: must be at least 20");
    }

    if (top.has("sweep")) {
        Reader s(top.raw("sweep"), "sweep");
        c.sweep.kappa_ghz = s.numbers("kappa_ghz");
        c.sweep.nbar_targets = s.numbers("nbar_targets");
        c.sweep.drive_amp_ghz = s.numbers("drive_amp_ghz");
        c.sweep.filter_gamma_ghz = s.numbers("filter_gamma_ghz");
        s.finish();
        check_grid(c.sweep.kappa_ghz, "sweep.kappa_ghz", false);
        check_grid(c.sweep.nbar_targets, "sweep.nbar_targets", true);
        check_grid(c.sweep.drive_amp_ghz, "sweep.drive_amp_ghz", true);
        check_grid(c.sweep.filter_gamma_ghz, "sweep.filter_gamma_ghz", false);
        require(c.sweep.nbar_targets.empty() || c.sweep.drive_amp_ghz.empty(),
                "sweep: give either nbar_targets or drive_amp_ghz, not both");
    }
    top.finish();

    // Cross-field requirements per experiment.
    const bool driven_grid = !c.sweep.nbar_targets.empty() || !c.sweep.drive_amp_ghz.empty();
    require(c.experiment == Experiment::purcell_sweep || c.sweep.kappa_ghz.empty(),
            "sweep.kappa_ghz: only used by purcell-sweep (set system.kappa_ghz instead)");
    require(c.experiment == Experiment::filter_gain || c.sweep.filter_gamma_ghz.empty(),
            "sweep.filter_gamma_ghz: only used by filter-gain");
    switch (c.experiment) {
        case Experiment::driven_sweep:
            require(c.drive.kind != model::DriveKind::none, "driven-sweep: drive.kind must be cosine or rwa");
            require(driven_grid, "driven-sweep: sweep.nbar_targets or sweep.drive_amp_ghz is required");
            break;
        case Experiment::filter_gain:
            require(!c.sweep.filter_gamma_ghz.empty() || c.spectrum.filter,
                    "filter-gain: spectrum.filter or sweep.filter_gamma_ghz is required");
            require(c.dissipator != dyn::DissipatorKind::lindblad, "filter-gain: needs a Redfield dissipator");
            require(!driven_grid || c.drive.kind != model::DriveKind::none,
                    "filter-gain: a driven sweep needs drive.kind cosine or rwa");
            break;
        case Experiment::rabi_vs_jc:
            require(c.spectrum.kind == env::SpectrumKind::flat && !c.spectrum.filter,
                    "rabi-vs-jc: requires an unfiltered flat spectrum");
            break;
        case Experiment::cavity_bench:
            require(c.drive.kind != model::DriveKind::none, "cavity-bench: drive.kind must be cosine or rwa");
            require(c.drive.amplitude_ghz > 0 || c.sweep.nbar_targets.size() <= 1,
                    "cavity-bench: give one drive amplitude or one nbar target");
            break;
        case Experiment::purcell_sweep:
            break;
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
    json j;
    j["experiment"] = to_string(c.experiment);
    j["tag"] = c.tag;
    j["system"] = {{"omega_q_ghz", c.omega_q_ghz},
                   {"omega_r_ghz", c.omega_r_ghz},
                   {"g_ghz", c.g_ghz},
                   {"kappa_ghz", c.kappa_ghz}};
    if (c.n_trunc > 0) j["system"]["n_trunc"] = c.n_trunc;
    else j["system"]["n_trunc"] = "auto";
    j["hamiltonian"] = model::to_string(c.hamiltonian);
    j["dissipator"] = dyn::to_string(c.dissipator);

    json s;
    s["kind"] = env::to_string(c.spectrum.kind);
    if (c.spectrum.level_ghz) s["level_ghz"] = *c.spectrum.level_ghz;
    if (c.spectrum.omega_c_ghz) s["omega_c_ghz"] = *c.spectrum.omega_c_ghz;
    if (c.spectrum.filter) {
        s["filter"] = {{"gamma_f_ghz", c.spectrum.filter->gamma_f_ghz}};
        if (c.spectrum.filter->omega_f_ghz) s["filter"]["omega_f_ghz"] = *c.spectrum.filter->omega_f_ghz;
    }
    j["spectrum"] = s;

    j["drive"] = {{"kind", model::to_string(c.drive.kind)}, {"amplitude_ghz", c.drive.amplitude_ghz}};
    if (c.drive.frequency_ghz) j["drive"]["frequency_ghz"] = *c.drive.frequency_ghz;

    switch (c.secular.mode) {
        case diss::Secular::Mode::none: j["secular"] = nullptr; break;
        case diss::Secular::Mode::full: j["secular"] = "full"; break;
        case diss::Secular::Mode::cutoff: j["secular"] = {{"omega_sec_ghz", c.secular.omega_sec_ghz}}; break;
    }

    const auto& pc = c.propagation;
    j["propagation"] = {{"rel_tol", pc.rel_tol},
                        {"abs_tol", pc.abs_tol},
                        {"max_step_ns", pc.max_step_ns},
                        {"t_final_ns", pc.t_final_ns},
                        {"frame", pc.frame ? dyn::to_string(*pc.frame) : "auto"},
                        {"td_cache", pc.td_cache},
                        {"cache_samples", pc.cache_samples},
                        {"decay_constants", pc.decay_constants},
                        {"samples_per_period", pc.samples_per_period},
                        {"undriven_samples", pc.undriven_samples}};

    json sw = json::object();
    if (!c.sweep.kappa_ghz.empty()) sw["kappa_ghz"] = c.sweep.kappa_ghz;
    if (!c.sweep.nbar_targets.empty()) sw["nbar_targets"] = c.sweep.nbar_targets;
    if (!c.sweep.drive_amp_ghz.empty()) sw["drive_amp_ghz"] = c.sweep.drive_amp_ghz;
    if (!c.sweep.filter_gamma_ghz.empty()) sw["filter_gamma_ghz"] = c.sweep.filter_gamma_ghz;
    j["sweep"] = sw;
    if (!c.output_dir.empty()) j["output_dir"] = c.output_dir;
    j["seed"] = c.seed;
    return j;
}

model::SystemParams system_params(const ExperimentConfig& c, double kappa_ghz) {
    model::SystemParams p;
    p.omega_q = ghz_to_rad(c.omega_q_ghz);
    p.omega_r = ghz_to_rad(c.omega_r_ghz);
    p.omega_d = ghz_to_rad(c.drive.frequency_ghz.value_or(c.omega_r_ghz));
    p.g = ghz_to_rad(c.g_ghz);
    p.kappa = ghz_to_rad(kappa_ghz);
    p.drive_amp = ghz_to_rad(c.drive.amplitude_ghz);
    p.n_trunc = c.n_trunc > 0 ? c.n_trunc : 10;
    return p;
}

env::SpectralDensity build_base_spectrum(const ExperimentConfig& c, const model::SystemParams& p) {
    return translate(
        [&] {
            if (c.spectrum.kind == env::SpectrumKind::ohmic) {
                const double wc = c.spectrum.omega_c_ghz ? ghz_to_rad(*c.spectrum.omega_c_ghz) : 2.0 * p.omega_r;
                return env::SpectralDensity::ohmic_calibrated(p.kappa, p.omega_r, wc);
            }
            return env::SpectralDensity::flat(c.spectrum.level_ghz ? ghz_to_rad(*c.spectrum.level_ghz) : p.kappa);
        },
        "spectrum");
}

env::SpectralDensity build_spectrum(const ExperimentConfig& c, const model::SystemParams& p) {
    env::SpectralDensity j = build_base_spectrum(c, p);
    if (c.spectrum.filter) {
        const double wf = c.spectrum.filter->omega_f_ghz ? ghz_to_rad(*c.spectrum.filter->omega_f_ghz) : p.omega_r;
        j = env::compose(j, {wf, ghz_to_rad(c.spectrum.filter->gamma_f_ghz)});
    }
    return j;
}

analysis::RunSpec run_spec(const ExperimentConfig& c, double kappa_ghz) {
    analysis::RunSpec s;
    s.params = system_params(c, kappa_ghz);
    s.hamiltonian = c.hamiltonian;
    s.drive_kind = c.drive.kind;
    s.dissipator.kind = c.dissipator;
    s.dissipator.kappa = s.params.kappa;
    s.dissipator.spectrum = build_spectrum(c, s.params);
    switch (c.secular.mode) {
        case diss::Secular::Mode::none: s.dissipator.secular = diss::Secular::none(); break;
        case diss::Secular::Mode::full: s.dissipator.secular = diss::Secular::full(); break;
        case diss::Secular::Mode::cutoff:
            s.dissipator.secular = diss::Secular::cutoff(ghz_to_rad(c.secular.omega_sec_ghz));
            break;
    }
    s.dissipator.td_cache = c.propagation.td_cache;
    s.dissipator.cache_samples = c.propagation.cache_samples;
    s.propagation.rel_tol = c.propagation.rel_tol;
    s.propagation.abs_tol = c.propagation.abs_tol;
    s.propagation.max_step = c.propagation.max_step_ns;
    s.propagation.t_final = c.propagation.t_final_ns;
    s.frame = c.propagation.frame;
    s.auto_truncation = c.n_trunc == 0;
    s.decay_constants = c.propagation.decay_constants;
    s.samples_per_period = c.propagation.samples_per_period;
    s.undriven_samples = c.propagation.undriven_samples;
    return s;
}

}  // namespace masterlab::config
