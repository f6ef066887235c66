#include "decohist/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace decohist {

namespace {

void check_square(const Matrix& m, const char* what) {
    if (m.rows() != m.cols() || m.rows() == 0)
        throw contract_violation(std::string("hilbert: ") + what + " must be square and non-empty");
    if (m.rows() > max_dim)
        throw cap_exceeded(std::string("hilbert: ") + what + " dimension " +
                           std::to_string(m.rows()) + " exceeds cap " + std::to_string(max_dim));
}

Eigen::SelfAdjointEigenSolver<Matrix> solve_eigen(const Matrix& m, const char* what,
                                                  bool vectors = true) {
    Eigen::SelfAdjointEigenSolver<Matrix> es;
    es.compute(m, vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw numerical_failure(std::string("hilbert: eigensolver failed for ") + what);
    return es;
}

} // namespace

// --------------------------------------------------------------- StateVector

StateVector::StateVector(Vector amplitudes) : amp_(std::move(amplitudes)) {
    if (amp_.size() == 0)
        throw contract_violation("hilbert: empty state vector");
    if (amp_.size() > max_dim)
        throw cap_exceeded("hilbert: state dimension " + std::to_string(amp_.size()) +
                           " exceeds cap " + std::to_string(max_dim));
    const double n = amp_.norm();
    if (std::abs(n - 1.0) > tol_norm)
        throw contract_violation("hilbert: state vector norm " + std::to_string(n) +
                                 " deviates from 1 beyond 1e-12");
}

StateVector StateVector::normalized(Vector amplitudes) {
    const double n = amplitudes.norm();
    if (n < 1e-300)
        throw contract_violation("hilbert: cannot normalize a zero vector");
    amplitudes /= n;
    return StateVector(std::move(amplitudes));
}

StateVector StateVector::basis_state(Index dim, Index k) {
    if (k < 0 || k >= dim)
        throw contract_violation("hilbert: basis index out of range");
    Vector v = Vector::Zero(dim);
    v(k) = 1.0;
    return StateVector(std::move(v));
}

Complex StateVector::overlap(const StateVector& other) const {
    if (dim() != other.dim())
        throw contract_violation("hilbert: overlap of states with different dimensions");
    return amp_.dot(other.amp_);  // Eigen dot conjugates the left factor
}

// --------------------------------------------------------- HermitianOperator

HermitianOperator::HermitianOperator(const Matrix& m) {
    check_square(m, "Hermitian operator");
    const double dev = max_abs(m - m.adjoint());
    if (dev > tol_herm)
        throw contract_violation("hilbert: anti-Hermitian part " + std::to_string(dev) +
                                 " exceeds 1e-12; refusing to symmetrize silently");
    mat_ = 0.5 * (m + m.adjoint());
}

HermitianOperator::HermitianOperator(Matrix m, trusted_tag) : mat_(std::move(m)) {}

HermitianOperator HermitianOperator::trusted(Matrix m) {
    check_square(m, "Hermitian operator");
    Matrix sym = 0.5 * (m + m.adjoint());
    return HermitianOperator(std::move(sym), trusted_tag{});
}

HermitianOperator operator+(const HermitianOperator& a, const HermitianOperator& b) {
    if (a.dim() != b.dim())
        throw contract_violation("hilbert: operator sum with mismatched dimensions");
    return HermitianOperator::trusted(a.matrix() + b.matrix());
}

HermitianOperator operator-(const HermitianOperator& a, const HermitianOperator& b) {
    if (a.dim() != b.dim())
        throw contract_violation("hilbert: operator difference with mismatched dimensions");
    return HermitianOperator::trusted(a.matrix() - b.matrix());
}

HermitianOperator operator*(double c, const HermitianOperator& a) {
    return HermitianOperator::trusted(c * a.matrix());
}

HermitianOperator i_commutator(const HermitianOperator& a, const HermitianOperator& b) {
    if (a.dim() != b.dim())
        throw contract_violation("hilbert: commutator with mismatched dimensions");
    Matrix ab = a.matrix() * b.matrix();
    return HermitianOperator::trusted(Complex(0, 1) * (ab - ab.adjoint()));
}

// ------------------------------------------------------------------ Projector

Projector::Projector(const Matrix& m) {
    check_square(m, "projector");
    const double herm_dev = max_abs(m - m.adjoint());
    if (herm_dev > tol_herm)
        throw contract_violation("hilbert: projector anti-Hermitian part " +
                                 std::to_string(herm_dev) + " exceeds 1e-12");
    mat_ = 0.5 * (m + m.adjoint());
    const double idem = max_abs(mat_ * mat_ - mat_);
    if (idem > tol_proj)
        throw contract_violation("hilbert: projector idempotence deviation " +
                                 std::to_string(idem) + " exceeds 1e-10");
    const double tr = mat_.trace().real();
    rank_ = static_cast<Index>(std::llround(tr));
    if (std::abs(tr - static_cast<double>(rank_)) > 1e-8 || rank_ < 0 || rank_ > dim())
        throw contract_violation("hilbert: projector trace " + std::to_string(tr) +
                                 " is not close to an admissible integer rank");
}

Projector Projector::onto(const StateVector& v) {
    return Projector(v.amplitudes() * v.amplitudes().adjoint());
}

Projector Projector::onto_columns(const Matrix& columns) {
    if (columns.rows() == 0 || columns.cols() == 0)
        throw contract_violation("hilbert: projector needs at least one column");
    const double ortho = max_abs(columns.adjoint() * columns -
                                 Matrix::Identity(columns.cols(), columns.cols()));
    if (ortho > tol_proj)
        throw contract_violation("hilbert: projector columns are not orthonormal (deviation " +
                                 std::to_string(ortho) + ")");
    return Projector(columns * columns.adjoint());
}

Projector Projector::identity(Index dim) { return Projector(Matrix::Identity(dim, dim)); }

Projector Projector::zero(Index dim) {
    Projector p = identity(dim);
    p.mat_.setZero();
    p.rank_ = 0;
    return p;
}

Projector Projector::complement() const {
    return Projector(Matrix::Identity(dim(), dim()) - mat_);
}

Projector::Projector(Matrix m, Index rank, trusted_tag) : mat_(std::move(m)), rank_(rank) {}

Projector trusted_projector(Matrix m, Index rank) {
    return Projector(std::move(m), rank, Projector::trusted_tag{});
}

// --------------------------------------------------------------- ProjectorSet

ProjectorSet::ProjectorSet(std::vector<Projector> members) : members_(std::move(members)) {
    if (members_.empty())
        throw contract_violation("hilbert: projector set must be non-empty");
    const Index d = members_.front().dim();
    Matrix sum = Matrix::Zero(d, d);
    for (const Projector& p : members_) {
        if (p.dim() != d)
            throw contract_violation("hilbert: projector set members have mixed dimensions");
        sum += p.matrix();
    }
    const double completeness = max_abs(sum - Matrix::Identity(d, d));
    if (completeness > tol_proj)
        throw contract_violation("hilbert: projector set does not sum to identity (deviation " +
                                 std::to_string(completeness) + ")");
    for (std::size_t a = 0; a < members_.size(); ++a)
        for (std::size_t b = a + 1; b < members_.size(); ++b) {
            const double cross = max_abs(members_[a].matrix() * members_[b].matrix());
            if (cross > tol_proj)
                throw contract_violation("hilbert: projector set members " + std::to_string(a) +
                                         " and " + std::to_string(b) +
                                         " are not orthogonal (deviation " +
                                         std::to_string(cross) + ")");
        }
}

ProjectorSet::ProjectorSet(std::vector<Projector> members, trusted_tag)
    : members_(std::move(members)) {}

ProjectorSet trusted_projector_set(std::vector<Projector> members) {
    return ProjectorSet(std::move(members), ProjectorSet::trusted_tag{});
}

ProjectorSet ProjectorSet::from_basis(const Matrix& basis) {
    check_square(basis, "basis");
    const double ortho = max_abs(basis.adjoint() * basis -
                                 Matrix::Identity(basis.cols(), basis.cols()));
    if (ortho > tol_proj)
        throw contract_violation("hilbert: basis columns are not orthonormal (deviation " +
                                 std::to_string(ortho) + ")");
    std::vector<Projector> members;
    members.reserve(static_cast<std::size_t>(basis.cols()));
    for (Index k = 0; k < basis.cols(); ++k)
        members.emplace_back(Matrix(basis.col(k) * basis.col(k).adjoint()));
    return ProjectorSet(std::move(members));
}

ProjectorSet ProjectorSet::from_basis_groups(const Matrix& basis,
                                             const std::vector<std::vector<int>>& groups) {
    check_square(basis, "basis");
    std::vector<char> seen(static_cast<std::size_t>(basis.cols()), 0);
    std::vector<Projector> members;
    members.reserve(groups.size());
    for (const auto& g : groups) {
        if (g.empty())
            throw contract_violation("hilbert: empty basis group");
        Matrix cols(basis.rows(), static_cast<Index>(g.size()));
        for (std::size_t j = 0; j < g.size(); ++j) {
            if (g[j] < 0 || g[j] >= basis.cols() || seen[static_cast<std::size_t>(g[j])])
                throw contract_violation("hilbert: basis groups must partition column indices");
            seen[static_cast<std::size_t>(g[j])] = 1;
            cols.col(static_cast<Index>(j)) = basis.col(g[j]);
        }
        members.push_back(Projector::onto_columns(cols));
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end())
        throw contract_violation("hilbert: basis groups must cover all column indices");
    return ProjectorSet(std::move(members));
}

ProjectorSet ProjectorSet::binary(const Projector& p) {
    std::vector<Projector> members;
    members.push_back(p);
    members.push_back(p.complement());
    return ProjectorSet(std::move(members));
}

ProjectorSet ProjectorSet::eigenspaces(const HermitianOperator& a, double cluster_tol) {
    const SpectralDecomposition sd = spectral_decompose(a);
    std::vector<Projector> members;
    Index k = 0;
    while (k < sd.eigenvalues.size()) {
        Index j = k;
        while (j + 1 < sd.eigenvalues.size() &&
               std::abs(sd.eigenvalues(j + 1) - sd.eigenvalues(k)) <= cluster_tol)
            ++j;
        members.push_back(Projector::onto_columns(sd.eigenvectors.middleCols(k, j - k + 1)));
        k = j + 1;
    }
    return ProjectorSet(std::move(members));
}

// -------------------------------------------------------------- DensityMatrix

DensityMatrix::DensityMatrix(const Matrix& m) {
    check_square(m, "density matrix");
    const double herm_dev = max_abs(m - m.adjoint());
    if (herm_dev > tol_herm)
        throw contract_violation("hilbert: density matrix anti-Hermitian part " +
                                 std::to_string(herm_dev) + " exceeds 1e-12");
    mat_ = 0.5 * (m + m.adjoint());
    const double tr = mat_.trace().real();
    if (std::abs(tr - 1.0) > tol_trace)
        throw contract_violation("hilbert: density matrix trace " + std::to_string(tr) +
                                 " deviates from 1 beyond 1e-10");
    const auto es = solve_eigen(mat_, "density matrix", false);
    const double min_eig = es.eigenvalues().minCoeff();
    if (min_eig < -tol_psd)
        throw contract_violation("hilbert: density matrix has eigenvalue " +
                                 std::to_string(min_eig) + " below -1e-10");
}

DensityMatrix::DensityMatrix(Matrix m, trusted_tag) : mat_(std::move(m)) {}

DensityMatrix trusted_density(Matrix m) {
    Matrix sym = 0.5 * (m + m.adjoint());
    return DensityMatrix(std::move(sym), DensityMatrix::trusted_tag{});
}

DensityMatrix DensityMatrix::pure(const StateVector& v) {
    return trusted_density(v.amplitudes() * v.amplitudes().adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed(Index dim) {
    if (dim <= 0)
        throw contract_violation("hilbert: non-positive dimension");
    return trusted_density(Matrix::Identity(dim, dim) / static_cast<double>(dim));
}

Matrix DensityMatrix::factor(double support_tol) const {
    const auto es = solve_eigen(mat_, "density matrix factor");
    std::vector<Index> keep;
    for (Index k = 0; k < es.eigenvalues().size(); ++k)
        if (es.eigenvalues()(k) > support_tol) keep.push_back(k);
    if (keep.empty())
        throw numerical_failure("hilbert: density matrix has empty numerical support");
    Matrix w(dim(), static_cast<Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j)
        w.col(static_cast<Index>(j)) =
            es.eigenvectors().col(keep[j]) * std::sqrt(es.eigenvalues()(keep[j]));
    return w;
}

// ----------------------------------------------------------------- operations

SpectralDecomposition spectral_decompose(const HermitianOperator& a) {
    const auto es = solve_eigen(a.matrix(), "spectral decomposition");
    const Index d = a.dim();
    SpectralDecomposition sd;
    sd.eigenvalues = es.eigenvalues().reverse();  // Eigen is ascending; we return descending
    sd.eigenvectors = es.eigenvectors().rowwise().reverse();
    const double recon = max_abs(sd.eigenvectors * sd.eigenvalues.asDiagonal() *
                                     sd.eigenvectors.adjoint() -
                                 a.matrix());
    const double scale = std::max(1.0, max_abs(a.matrix()));
    if (recon > 1e-10 * scale)
        throw numerical_failure("hilbert: spectral reconstruction error " +
                                std::to_string(recon) + " exceeds tolerance");
    const double gram = max_abs(sd.eigenvectors.adjoint() * sd.eigenvectors -
                                Matrix::Identity(d, d));
    if (gram > 1e-10)
        throw numerical_failure("hilbert: eigenvector basis lost orthonormality");
    return sd;
}

HermitianOperator herm_exp(const HermitianOperator& a, double scale) {
    const auto es = solve_eigen(a.matrix(), "herm_exp");
    RealVector ev = es.eigenvalues();
    const double top = (scale * ev.array()).maxCoeff();
    if (top > exp_overflow)
        throw numerical_failure(
            "hilbert: herm_exp exponent " + std::to_string(top) +
            " exceeds 700 and would overflow; rescale the operator or multipliers");
    RealVector ex = (scale * ev.array()).exp();
    return HermitianOperator::trusted(es.eigenvectors() * ex.asDiagonal() *
                                      es.eigenvectors().adjoint());
}

Matrix evolution_operator(const HermitianOperator& h, double t, double hbar) {
    if (hbar <= 0.0)
        throw contract_violation("hilbert: hbar must be positive");
    const auto es = solve_eigen(h.matrix(), "evolution operator");
    const Index d = h.dim();
    Vector phases(d);
    for (Index k = 0; k < d; ++k)
        phases(k) = std::exp(Complex(0.0, es.eigenvalues()(k) * t / hbar));
    Matrix u = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
    const double unit = max_abs(u * u.adjoint() - Matrix::Identity(d, d));
    if (unit > tol_proj)
        throw numerical_failure("hilbert: evolution operator unitarity deviation " +
                                std::to_string(unit));
    return u;
}

Projector heisenberg_evolve(const Projector& p, const HermitianOperator& h,
                            double t, double hbar) {
    if (p.dim() != h.dim())
        throw contract_violation("hilbert: projector and Hamiltonian dimensions differ");
    const Matrix u = evolution_operator(h, t, hbar);
    Projector evolved(Matrix(u * p.matrix() * u.adjoint()));
    if (evolved.rank() != p.rank())
        throw numerical_failure("hilbert: Heisenberg evolution changed projector rank");
    return evolved;
}

double von_neumann_entropy(const DensityMatrix& rho) {
    const auto es = solve_eigen(rho.matrix(), "entropy", false);
    double s = 0.0;
    for (Index k = 0; k < es.eigenvalues().size(); ++k) {
        double p = es.eigenvalues()(k);
        if (p < -tol_psd)
            throw numerical_failure("hilbert: entropy of a non-positive matrix");
        if (p <= 0.0) continue;               // [-tol_psd, 0) clipped to 0; 0 log 0 = 0
        if (p > 1.0) p = std::min(p, 1.0);    // eigenvalue 1 + rounding
        s -= p * std::log(p);
    }
    return s;
}

double expectation(const HermitianOperator& a, const DensityMatrix& rho) {
    if (a.dim() != rho.dim())
        throw contract_violation("hilbert: expectation with mismatched dimensions");
    const Complex tr = (a.matrix().transpose().cwiseProduct(rho.matrix())).sum();
    if (std::abs(tr.imag()) > 1e-10)
        throw numerical_failure("hilbert: expectation value has imaginary part " +
                                std::to_string(tr.imag()));
    return tr.real();
}

double expectation(const HermitianOperator& a, const StateVector& psi) {
    if (a.dim() != psi.dim())
        throw contract_violation("hilbert: expectation with mismatched dimensions");
    const Complex v = psi.amplitudes().dot(a.matrix() * psi.amplitudes());
    if (std::abs(v.imag()) > 1e-10)
        throw numerical_failure("hilbert: expectation value has imaginary part " +
                                std::to_string(v.imag()));
    return v.real();
}

} // namespace decohist
