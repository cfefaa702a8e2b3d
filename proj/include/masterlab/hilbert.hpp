// hilbert.hpp — Dense operators on the truncated qubit ⊗ resonator space.
//
// Basis ordering: qubit factor first, index 0 = |e> (sigma_z = +1), index 1 = |g>.
// Composite index of |q, n> is q * N + n.

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <complex>
#include <string>
#include <vector>

namespace masterlab::hilbert {

using cplx = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using SparseOperator = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

struct EigSystem {
    Eigen::VectorXd values;             // ascending
    Operator vectors;                   // columns are eigenvectors
    std::vector<std::string> labels;    // optional, filled by model::dressed_labels

    Eigen::Index dim() const { return values.size(); }
    Operator to_eigen(const Operator& lab) const { return vectors.adjoint() * lab * vectors; }
    Operator to_lab(const Operator& eig) const { return vectors * eig * vectors.adjoint(); }
};

Operator identity(int n);
Operator kron(const Operator& a, const Operator& b);

/// Truncated harmonic-oscillator lowering operator: a[n-1, n] = sqrt(n).
Operator annihilation(int n);

Operator sigma_z();
Operator sigma_x();
Operator sigma_minus();  // |g><e|
Operator sigma_plus();   // |e><g|

/// Max |M - M^dagger| below rel_tol * max|M| (a zero matrix is Hermitian).
bool is_hermitian(const Operator& m, double rel_tol = 1e-12);

/// Hermitian eigendecomposition with ascending values and a fixed gauge:
/// the largest-magnitude component of each eigenvector is real positive.
EigSystem eigh(const Operator& h);

/// Tr(rho O). Throws on dimension mismatch or rho with trace far from one.
cplx expectation(const Operator& rho, const Operator& o);

/// Largest entry magnitude.
double max_abs(const Operator& m);

SparseOperator to_sparse(const Operator& m);

/// Operators of the composite qubit ⊗ resonator space with resonator truncation N.
struct QubitResonator {
    explicit QubitResonator(int n_trunc);

    int n_trunc;
    int dim;
    Operator sz;      // sigma_z ⊗ I
    Operator sx;      // sigma_x ⊗ I
    Operator sm;      // sigma_- ⊗ I
    Operator sp;      // sigma_+ ⊗ I
    Operator a;       // I ⊗ a
    Operator x;       // I ⊗ (a + a^dagger)
    Operator n;       // I ⊗ a^dagger a
    Operator top_fock;  // projector on the two highest Fock levels

    /// Composite index of the bare product state |q, photons>, q in {'e', 'g'}.
    int index(char qubit, int photons) const;
};

}  // namespace masterlab::hilbert
