// environment.cpp — Spectral density evaluation and filtering.

#include "masterlab/environment.hpp"

#include "masterlab/errors.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace masterlab::env {

double bandpass_factor(const FilterSpec& f, double omega) {
    if (!(f.gamma_f > 0.0)) throw InvalidInput("FilterSpec: gamma_f must be positive");
    const double x = (omega - f.omega_f) / f.gamma_f;
    return 1.0 / (1.0 + x * x);
}

SpectralDensity SpectralDensity::flat(double level) {
    if (!(level >= 0.0)) throw InvalidInput("flat spectrum: level must be non-negative");
    SpectralDensity j;
    j.kind_ = j.base_kind_ = SpectrumKind::flat;
    j.level_ = level;
    return j;
}

SpectralDensity SpectralDensity::ohmic(double alpha, double omega_c) {
    if (!(alpha >= 0.0)) throw InvalidInput("ohmic spectrum: alpha must be non-negative");
    if (!(omega_c > 0.0)) throw InvalidInput("ohmic spectrum: omega_c must be positive");
    SpectralDensity j;
    j.kind_ = j.base_kind_ = SpectrumKind::ohmic;
    j.alpha_ = alpha;
    j.omega_c_ = omega_c;
    return j;
}

SpectralDensity SpectralDensity::ohmic_calibrated(double kappa, double omega_r, double omega_c) {
    if (!(omega_r > 0.0)) throw InvalidInput("ohmic calibration: omega_r must be positive");
    if (omega_r > omega_c) throw InvalidInput("ohmic calibration: omega_r lies above the cutoff");
    return ohmic(2.0 * kappa / (std::numbers::pi * omega_r), omega_c);
}

double SpectralDensity::eval(double omega) const {
    if (!(omega > 0.0)) return 0.0;
    double base_value = 0.0;
    switch (base_kind_) {
        case SpectrumKind::flat:
            base_value = level_;
            break;
        case SpectrumKind::ohmic:
            base_value = omega <= omega_c_ ? 0.5 * std::numbers::pi * alpha_ * omega : 0.0;
            break;
        case SpectrumKind::composed:
            break;
    }
    if (filter_) base_value *= bandpass_factor(*filter_, omega);
    return base_value;
}

SpectralDensity SpectralDensity::base() const {
    SpectralDensity b = *this;
    b.filter_.reset();
    b.kind_ = base_kind_;
    return b;
}

std::string SpectralDensity::describe() const {
    std::ostringstream os;
    os << to_string(base_kind_);
    if (base_kind_ == SpectrumKind::flat) os << "(level=" << level_ << ")";
    if (base_kind_ == SpectrumKind::ohmic) os << "(alpha=" << alpha_ << ", omega_c=" << omega_c_ << ")";
    if (filter_) os << " x bandpass(omega_f=" << filter_->omega_f << ", gamma_f=" << filter_->gamma_f << ")";
    return os.str();
}

SpectralDensity compose(const SpectralDensity& base, const FilterSpec& f) {
    if (base.kind() == SpectrumKind::composed) {
        throw InvalidInput("compose: spectral density already carries a filter");
    }
    if (!(f.gamma_f > 0.0)) throw InvalidInput("FilterSpec: gamma_f must be positive");
    SpectralDensity out = base;
    out.kind_ = SpectrumKind::composed;
    out.filter_ = f;
    return out;
}

double t1_gain(const SpectralDensity& base, const SpectralDensity& eff, double omega_q) {
    const double je = eff.eval(omega_q);
    if (!(je > 0.0)) throw NumericalError("t1_gain: effective spectral density vanishes at omega_q (infinite gain)");
    return base.eval(omega_q) / je;
}

std::string to_string(SpectrumKind k) {
    switch (k) {
        case SpectrumKind::flat: return "flat";
        case SpectrumKind::ohmic: return "ohmic";
        case SpectrumKind::composed: return "composed";
    }
    return "?";
}

}  // namespace masterlab::env
