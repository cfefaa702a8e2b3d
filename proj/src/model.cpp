// model.cpp — Hamiltonians, drives and dressed-state bookkeeping.

#include "masterlab/model.hpp"

#include "masterlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace masterlab::model {

using hilbert::cplx;
using hilbert::QubitResonator;

std::vector<std::string> validate(const SystemParams& p) {
    if (!(p.omega_q > 0.0) || !(p.omega_r > 0.0)) {
        throw InvalidInput("SystemParams: omega_q and omega_r must be positive");
    }
    if (!(p.g >= 0.0)) throw InvalidInput("SystemParams: g must be non-negative");
    if (!(p.kappa > 0.0)) throw InvalidInput("SystemParams: kappa must be positive");
    if (p.n_trunc < 2) throw InvalidInput("SystemParams: n_trunc must be >= 2");
    if (!(p.omega_d >= 0.0)) throw InvalidInput("SystemParams: omega_d must be non-negative");
    std::vector<std::string> warnings;
    const double delta = p.detuning();
    if (delta != 0.0 && std::abs(p.g / delta) > 0.2) {
        std::ostringstream os;
        os << "|g/Delta| = " << std::abs(p.g / delta) << " exceeds 0.2: outside the dispersive regime";
        warnings.push_back(os.str());
    }
    return warnings;
}

void validate(const DriveSpec& d) {
    if (d.kind == DriveKind::none && d.amplitude != 0.0) {
        throw InvalidInput("DriveSpec: kind 'none' requires zero amplitude");
    }
    if (d.amplitude < 0.0) throw InvalidInput("DriveSpec: amplitude must be non-negative");
    if (d.kind != DriveKind::none && !(d.frequency > 0.0)) {
        throw InvalidInput("DriveSpec: drive frequency must be positive");
    }
}

std::string to_string(DriveKind k) {
    switch (k) {
        case DriveKind::none: return "none";
        case DriveKind::cosine: return "cosine";
        case DriveKind::rwa: return "rwa";
    }
    return "?";
}

DriveKind drive_kind_from_string(const std::string& s) {
    if (s == "none") return DriveKind::none;
    if (s == "cosine") return DriveKind::cosine;
    if (s == "rwa") return DriveKind::rwa;
    throw InvalidInput("unknown drive kind '" + s + "'");
}

std::string to_string(HamiltonianKind k) { return k == HamiltonianKind::rabi ? "rabi" : "jc"; }

namespace {

Operator bare_part(const SystemParams& p, const QubitResonator& ops) {
    return 0.5 * p.omega_q * ops.sz + p.omega_r * ops.n;
}

}  // namespace

Operator build_rabi(const SystemParams& p) {
    const QubitResonator ops(p.n_trunc);
    return bare_part(p, ops) + p.g * ops.sx * ops.x;
}

Operator build_jc(const SystemParams& p) {
    const QubitResonator ops(p.n_trunc);
    const Operator adag = ops.a.adjoint();
    return bare_part(p, ops) + p.g * (ops.sm * adag + ops.sp * ops.a);
}

Operator build_hamiltonian(const SystemParams& p, HamiltonianKind kind) {
    return kind == HamiltonianKind::rabi ? build_rabi(p) : build_jc(p);
}

Operator drive_operator(const DriveSpec& spec, double t, int n_trunc) {
    if (t < 0.0) throw InvalidInput("drive_operator: t must be non-negative");
    const QubitResonator ops(n_trunc);
    switch (spec.kind) {
        case DriveKind::none:
            return Operator::Zero(ops.dim, ops.dim);
        case DriveKind::cosine:
            return spec.amplitude * std::cos(spec.frequency * t) * ops.x;
        case DriveKind::rwa: {
            const cplx ph = std::polar(1.0, spec.frequency * t);
            return spec.amplitude * (ph * ops.a + std::conj(ph) * Operator(ops.a.adjoint()));
        }
    }
    return {};
}

std::string DressedLabel::name() const { return std::string(1, qubit) + std::to_string(photons); }

std::vector<DressedLabel> dressed_labels(const EigSystem& eig, const SystemParams& p, int count) {
    const QubitResonator ops(p.n_trunc);
    if (eig.dim() != ops.dim) throw InvalidInput("dressed_labels: eigensystem dimension mismatch");
    count = std::min<int>(count, static_cast<int>(eig.dim()));

    // An eigenvector claims every bare state it overlaps with above this
    // weight; two claims on one bare state mean the labels are not separable.
    constexpr double kClaimThreshold = 0.4;

    std::vector<int> owner(static_cast<std::size_t>(ops.dim), -1);
    std::vector<DressedLabel> labels;
    labels.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        const Eigen::VectorXd w = eig.vectors.col(k).cwiseAbs2();
        for (int b = 0; b < ops.dim; ++b) {
            if (w(b) <= kClaimThreshold) continue;
            auto& o = owner[static_cast<std::size_t>(b)];
            if (o >= 0) {
                std::ostringstream os;
                os << "dressed_labels: eigenstates " << o << " and " << k << " both claim bare state |"
                   << (b < ops.n_trunc ? 'e' : 'g') << "," << b % ops.n_trunc << "> (ambiguous labels)";
                throw NumericalError(os.str());
            }
            o = k;
        }
        Eigen::Index best = 0;
        w.maxCoeff(&best);
        if (owner[static_cast<std::size_t>(best)] != k) {
            throw NumericalError("dressed_labels: eigenstate " + std::to_string(k) +
                                 " has no dominant bare component");
        }
        DressedLabel lab;
        lab.index = k;
        lab.qubit = best < ops.n_trunc ? 'e' : 'g';
        lab.photons = static_cast<int>(best % ops.n_trunc);
        lab.overlap2 = w(best);
        labels.push_back(lab);
    }
    return labels;
}

int find_label(const std::vector<DressedLabel>& labels, char qubit, int photons) {
    for (const auto& l : labels) {
        if (l.qubit == qubit && l.photons == photons) return l.index;
    }
    throw NumericalError("no eigenstate labelled |" + std::string(1, qubit) + std::to_string(photons) + ">");
}

double dispersive_shift(const SystemParams& p) {
    const double delta = p.detuning();
    if (delta == 0.0) throw NumericalError("dispersive_shift: singular at zero detuning");
    return p.g * p.g * (1.0 / delta + 1.0 / p.sum_freq());
}

double stark_shifted_freq(const SystemParams& p, double nbar) {
    if (nbar < 0.0) throw InvalidInput("stark_shifted_freq: nbar must be non-negative");
    return p.omega_q + 2.0 * dispersive_shift(p) * nbar;
}

}  // namespace masterlab::model
