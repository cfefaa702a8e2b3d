// support.hpp — Shared fixtures for the unit tests.

#pragma once

#include "masterlab/hilbert.hpp"
#include "masterlab/model.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

namespace support {

using masterlab::hilbert::cplx;
using masterlab::hilbert::Operator;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Reference qubit-resonator parameters (GHz values times 2 pi).
inline masterlab::model::SystemParams reference_params(double kappa_ghz = 0.1, int n_trunc = 10) {
    masterlab::model::SystemParams p;
    p.omega_q = kTwoPi * 5.304;
    p.omega_r = kTwoPi * 7.5;
    p.omega_d = p.omega_r;
    p.g = kTwoPi * 0.211;
    p.kappa = kTwoPi * kappa_ghz;
    p.n_trunc = n_trunc;
    return p;
}

inline Operator random_matrix(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> d;
    Operator m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = cplx(d(rng), d(rng));
    return m;
}

inline Operator random_hermitian(int n, std::mt19937_64& rng) {
    const Operator m = random_matrix(n, rng);
    return 0.5 * (m + m.adjoint());
}

/// Random density matrix: G G^dag / Tr.
inline Operator random_density(int n, std::mt19937_64& rng) {
    const Operator m = random_matrix(n, rng);
    Operator rho = m * m.adjoint();
    return rho / rho.trace();
}

inline double max_abs_diff(const Operator& a, const Operator& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace support
