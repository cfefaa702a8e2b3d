// model.hpp — Qubit–resonator Hamiltonians, drives, dressed-state labels and
// dispersive-regime quantities. All frequencies are angular, in rad/ns.

#pragma once

#include "masterlab/hilbert.hpp"

#include <string>
#include <vector>

namespace masterlab::model {

using hilbert::EigSystem;
using hilbert::Operator;

struct SystemParams {
    double omega_q = 0.0;
    double omega_r = 0.0;
    double omega_d = 0.0;
    double g = 0.0;
    double kappa = 0.0;
    double drive_amp = 0.0;  // eta for the cosine drive, epsilon for the RWA drive
    int n_trunc = 10;

    double detuning() const { return omega_q - omega_r; }   // Delta
    double sum_freq() const { return omega_q + omega_r; }   // Sigma
};

/// Throws InvalidInput on violated invariants. Returns human-readable warnings
/// (|g/Delta| > 0.2 leaves the dispersive regime).
std::vector<std::string> validate(const SystemParams& p);

enum class DriveKind { none, cosine, rwa };

struct DriveSpec {
    DriveKind kind = DriveKind::none;
    double amplitude = 0.0;
    double frequency = 0.0;
};

void validate(const DriveSpec& d);
std::string to_string(DriveKind k);
DriveKind drive_kind_from_string(const std::string& s);

enum class HamiltonianKind { rabi, jc };
std::string to_string(HamiltonianKind k);

/// (w_q/2) sz + w_r a^dag a + g sx (a + a^dag)
Operator build_rabi(const SystemParams& p);
/// (w_q/2) sz + w_r a^dag a + g (s- a^dag + s+ a)
Operator build_jc(const SystemParams& p);
Operator build_hamiltonian(const SystemParams& p, HamiltonianKind kind);

/// Resonator drive at time t: cosine -> eta cos(w_d t) X, rwa -> eps (a e^{i w_d t} + h.c.).
Operator drive_operator(const DriveSpec& spec, double t, int n_trunc);

struct DressedLabel {
    int index = -1;       // eigenvector column
    char qubit = 'g';
    int photons = 0;
    double overlap2 = 0.0;
    std::string name() const;  // e.g. "g0", "e1"
};

/// Greedy max-overlap assignment of the lowest `count` eigenstates to bare
/// product states |q, n>. Throws NumericalError if two eigenstates claim the
/// same bare state.
std::vector<DressedLabel> dressed_labels(const EigSystem& eig, const SystemParams& p, int count = 6);

/// Eigenvector index labelled |q n> among `labels`; throws if absent.
int find_label(const std::vector<DressedLabel>& labels, char qubit, int photons);

/// chi = g^2 (1/Delta + 1/Sigma)
double dispersive_shift(const SystemParams& p);

/// AC-Stark shifted qubit frequency w_q + 2 chi nbar.
double stark_shifted_freq(const SystemParams& p, double nbar);

}  // namespace masterlab::model
