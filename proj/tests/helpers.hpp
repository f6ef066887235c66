#pragma once

// Shared test fixtures. Oracles here are written independently of the library
// implementation (plain Eigen), so agreement is evidence, not tautology.

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace testutil {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Complex = std::complex<double>;

inline Matrix pauli_x() {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

inline Matrix pauli_y() {
    Matrix m(2, 2);
    m << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
    return m;
}

inline Matrix pauli_z() {
    Matrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

inline Matrix eye(Eigen::Index d) { return Matrix::Identity(d, d); }

// Independent Kronecker product for tensor oracles.
inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline Matrix kron_chain(const std::vector<Matrix>& ms) {
    Matrix out = ms.front();
    for (std::size_t k = 1; k < ms.size(); ++k) out = kron(out, ms[k]);
    return out;
}

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

// Discrete Fourier basis, columns |f_k> with entries e^{2πi jk/d}/√d.
inline Matrix fourier_basis(Eigen::Index d) {
    Matrix f(d, d);
    const double w = 2.0 * M_PI / static_cast<double>(d);
    for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index k = 0; k < d; ++k)
            f(j, k) = std::exp(Complex(0.0, w * static_cast<double>(j * k))) /
                      std::sqrt(static_cast<double>(d));
    return f;
}

} // namespace testutil
