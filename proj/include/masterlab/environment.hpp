// environment.hpp — Spectral densities J(w) of the transmission-line bath and
// Lorentzian band-pass filter composition.
//
// Zero-temperature convention: J(w) = 0 for w <= 0, so upward transitions
// carry no rate.

#pragma once

#include <optional>
#include <string>

namespace masterlab::env {

struct FilterSpec {
    double omega_f = 0.0;  // filter centre, rad/ns
    double gamma_f = 0.0;  // bandwidth, rad/ns (> 0)
};

/// 1 / (1 + ((w - w_f)/gamma_f)^2)
double bandpass_factor(const FilterSpec& f, double omega);

enum class SpectrumKind { flat, ohmic, composed };

class SpectralDensity {
public:
    /// J(w) = level for w > 0.
    static SpectralDensity flat(double level);
    /// J(w) = (pi/2) alpha w for 0 < w <= omega_c.
    static SpectralDensity ohmic(double alpha, double omega_c);
    /// Ohmic spectrum carrying weight kappa at the cavity frequency:
    /// alpha = 2 kappa / (pi omega_r).
    static SpectralDensity ohmic_calibrated(double kappa, double omega_r, double omega_c);

    double operator()(double omega) const { return eval(omega); }
    double eval(double omega) const;

    SpectrumKind kind() const { return kind_; }
    /// Kind of the unfiltered density (differs from kind() only when composed).
    SpectrumKind base_kind() const { return base_kind_; }
    double level() const { return level_; }
    double alpha() const { return alpha_; }
    double omega_c() const { return omega_c_; }
    const std::optional<FilterSpec>& filter() const { return filter_; }

    /// The same density with the filter removed.
    SpectralDensity base() const;

    std::string describe() const;

private:
    friend SpectralDensity compose(const SpectralDensity& base, const FilterSpec& f);

    SpectrumKind kind_ = SpectrumKind::flat;
    SpectrumKind base_kind_ = SpectrumKind::flat;
    double level_ = 0.0;
    double alpha_ = 0.0;
    double omega_c_ = 0.0;
    std::optional<FilterSpec> filter_;
};

/// J_eff(w) = J(w) F_bp(w). Rejects an already composed base.
SpectralDensity compose(const SpectralDensity& base, const FilterSpec& f);

/// T1 gain J(w_q) / J_eff(w_q); throws NumericalError when J_eff(w_q) = 0.
double t1_gain(const SpectralDensity& base, const SpectralDensity& eff, double omega_q);

std::string to_string(SpectrumKind k);

}  // namespace masterlab::env
