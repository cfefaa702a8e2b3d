// hilbert.cpp — Operator construction and Hermitian eigensolver.

#include "masterlab/hilbert.hpp"

#include "masterlab/errors.hpp"

#include <cmath>
#include <string>

namespace masterlab::hilbert {

Operator identity(int n) { return Operator::Identity(n, n); }

Operator kron(const Operator& a, const Operator& b) {
    const Eigen::Index ra = a.rows(), ca = a.cols();
    const Eigen::Index rb = b.rows(), cb = b.cols();
    Operator out(ra * rb, ca * cb);
    for (Eigen::Index i = 0; i < ra; ++i) {
        for (Eigen::Index j = 0; j < ca; ++j) {
            out.block(i * rb, j * cb, rb, cb) = a(i, j) * b;
        }
    }
    return out;
}

Operator annihilation(int n) {
    if (n < 2) {
        throw InvalidInput("annihilation: invalid truncation N=" + std::to_string(n) + " (need N >= 2)");
    }
    Operator a = Operator::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        a(k - 1, k) = std::sqrt(static_cast<double>(k));
    }
    return a;
}

Operator sigma_z() {
    Operator s = Operator::Zero(2, 2);
    s(0, 0) = 1.0;
    s(1, 1) = -1.0;
    return s;
}

Operator sigma_x() {
    Operator s = Operator::Zero(2, 2);
    s(0, 1) = 1.0;
    s(1, 0) = 1.0;
    return s;
}

Operator sigma_minus() {
    Operator s = Operator::Zero(2, 2);
    s(1, 0) = 1.0;
    return s;
}

Operator sigma_plus() { return sigma_minus().transpose(); }

double max_abs(const Operator& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

bool is_hermitian(const Operator& m, double rel_tol) {
    if (m.rows() != m.cols()) return false;
    const double scale = max_abs(m);
    if (scale == 0.0) return true;
    return max_abs(m - m.adjoint()) < rel_tol * scale;
}

EigSystem eigh(const Operator& h) {
    if (!is_hermitian(h)) {
        throw InvalidInput("eigh: operator is not Hermitian");
    }
    Eigen::SelfAdjointEigenSolver<Operator> solver(h);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("eigh: eigendecomposition failed");
    }
    EigSystem out;
    out.values = solver.eigenvalues();
    out.vectors = solver.eigenvectors();
    for (Eigen::Index k = 0; k < out.vectors.cols(); ++k) {
        Eigen::Index imax = 0;
        out.vectors.col(k).cwiseAbs2().maxCoeff(&imax);
        const cplx c = out.vectors(imax, k);
        out.vectors.col(k) *= std::conj(c) / std::abs(c);
        out.vectors(imax, k) = std::abs(out.vectors(imax, k));
    }
    return out;
}

cplx expectation(const Operator& rho, const Operator& o) {
    if (rho.rows() != rho.cols() || o.rows() != o.cols() || rho.rows() != o.rows()) {
        throw InvalidInput("expectation: dimension mismatch");
    }
    const cplx tr = rho.trace();
    if (std::abs(tr - 1.0) > 1e-8) {
        throw InvalidInput("expectation: density matrix trace is not one");
    }
    // Tr(rho O) = sum_ij rho_ij O_ji
    return (rho.array() * o.transpose().array()).sum();
}

SparseOperator to_sparse(const Operator& m) {
    SparseOperator s = m.sparseView(0.0, 0.0);
    s.makeCompressed();
    return s;
}

QubitResonator::QubitResonator(int n_trunc_) : n_trunc(n_trunc_), dim(2 * n_trunc_) {
    const Operator an = annihilation(n_trunc);
    const Operator in = identity(n_trunc);
    const Operator i2 = identity(2);
    sz = kron(sigma_z(), in);
    sx = kron(sigma_x(), in);
    sm = kron(sigma_minus(), in);
    sp = kron(sigma_plus(), in);
    a = kron(i2, an);
    x = kron(i2, an + an.adjoint());
    n = kron(i2, an.adjoint() * an);
    Operator top = Operator::Zero(n_trunc, n_trunc);
    top(n_trunc - 1, n_trunc - 1) = 1.0;
    top(n_trunc - 2, n_trunc - 2) = 1.0;
    top_fock = kron(i2, top);
}

int QubitResonator::index(char qubit, int photons) const {
    if ((qubit != 'e' && qubit != 'g') || photons < 0 || photons >= n_trunc) {
        throw InvalidInput("QubitResonator::index: no bare state |" + std::string(1, qubit) + "," +
                           std::to_string(photons) + ">");
    }
    return (qubit == 'e' ? 0 : 1) * n_trunc + photons;
}

}  // namespace masterlab::hilbert
