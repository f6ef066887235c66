#include "decohist/random.hpp"

namespace decohist::rng {

Matrix ginibre(Index rows, Index cols, Engine& eng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix g(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i)
            g(i, j) = Complex(n(eng), n(eng));
    return g;
}

Vector haar_vector(Index dim, Engine& eng) {
    Vector v = ginibre(dim, 1, eng).col(0);
    return v / v.norm();
}

Matrix haar_unitary(Index dim, Engine& eng) {
    Matrix g = ginibre(dim, dim, eng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index k = 0; k < dim; ++k) {
        Complex d = r(k, k);
        q.col(k) *= (std::abs(d) > 0.0) ? d / std::abs(d) : Complex(1.0, 0.0);
    }
    return q;
}

HermitianOperator random_hermitian(Index dim, Engine& eng) {
    Matrix g = ginibre(dim, dim, eng);
    return HermitianOperator::trusted(0.5 * (g + g.adjoint()));
}

DensityMatrix random_density(Index dim, Engine& eng, double boost) {
    Matrix g = ginibre(dim, dim, eng);
    Matrix m = g * g.adjoint() + boost * Matrix::Identity(dim, dim);
    m /= m.trace().real();
    return trusted_density(std::move(m));
}

} // namespace decohist::rng
