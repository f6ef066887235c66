#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "decohist/errors.hpp"

namespace decohist {

using Complex    = std::complex<double>;
using Matrix     = Eigen::MatrixXcd;
using Vector     = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;
using Index      = Eigen::Index;

// Units: hbar = 1, k_B = 1 throughout; entropies in nats.

inline constexpr double tol_norm     = 1e-12;  // state normalization
inline constexpr double tol_herm     = 1e-12;  // allowed anti-Hermitian part of inputs
inline constexpr double tol_proj     = 1e-10;  // idempotence / completeness / orthogonality
inline constexpr double tol_trace    = 1e-10;  // density-matrix trace deviation
inline constexpr double tol_psd      = 1e-10;  // allowed negative eigenvalue of a density matrix
inline constexpr double exp_overflow = 700.0;  // largest safe exponent for exp()
inline constexpr Index  max_dim      = Index{1} << 14;  // single-operator cap

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

// ---------------------------------------------------------------------------

class StateVector {
public:
    // Requires unit norm within tol_norm.
    explicit StateVector(Vector amplitudes);

    // Rescales to unit norm first; rejects (near-)zero vectors.
    static StateVector normalized(Vector amplitudes);
    static StateVector basis_state(Index dim, Index k);

    Index dim() const { return amp_.size(); }
    const Vector& amplitudes() const { return amp_; }

    // <this|other>
    Complex overlap(const StateVector& other) const;

private:
    Vector amp_;
};

// ---------------------------------------------------------------------------

class HermitianOperator {
public:
    // Symmetrizes (A + A†)/2; anti-Hermitian part above tol_herm is rejected
    // rather than silently fixed.
    explicit HermitianOperator(const Matrix& m);

    Index dim() const { return mat_.rows(); }
    const Matrix& matrix() const { return mat_; }

    // For results that are Hermitian by construction (V f(Λ) V†, sums of
    // Hermitians, ...): symmetrize unconditionally, skip the input gate.
    static HermitianOperator trusted(Matrix m);

private:
    struct trusted_tag {};
    HermitianOperator(Matrix m, trusted_tag);
    Matrix mat_;
};

HermitianOperator operator+(const HermitianOperator&, const HermitianOperator&);
HermitianOperator operator-(const HermitianOperator&, const HermitianOperator&);
HermitianOperator operator*(double, const HermitianOperator&);

// i[A, B] is Hermitian when A, B are; this is the Heisenberg rate d/dt at t=0.
HermitianOperator i_commutator(const HermitianOperator& a, const HermitianOperator& b);

// ---------------------------------------------------------------------------

class Projector {
public:
    // Hermitian + idempotent within tol_proj; rank = round(trace).
    explicit Projector(const Matrix& m);

    static Projector onto(const StateVector& v);           // rank 1
    static Projector onto_columns(const Matrix& columns);  // columns orthonormal
    static Projector identity(Index dim);
    static Projector zero(Index dim);

    Index dim() const { return mat_.rows(); }
    Index rank() const { return rank_; }
    const Matrix& matrix() const { return mat_; }

    Projector complement() const;  // I - P

private:
    struct trusted_tag {};
    Projector(Matrix m, Index rank, trusted_tag);
    Matrix mat_;
    Index rank_ = 0;

    friend Projector trusted_projector(Matrix m, Index rank);
};

// Internal: wrap a matrix known to be an orthogonal projector of the stated
// rank (assembled blockwise from exact identities, unitary conjugations, ...)
// without the O(d^3) re-validation.
Projector trusted_projector(Matrix m, Index rank);

// Exhaustive exclusive set: sum to identity, mutually orthogonal, all within
// tol_proj. Zero-rank members are allowed (they carry empty alternatives).
class ProjectorSet {
public:
    explicit ProjectorSet(std::vector<Projector> members);

    static ProjectorSet from_basis(const Matrix& basis);  // rank-1 member per column
    static ProjectorSet from_basis_groups(const Matrix& basis,
                                          const std::vector<std::vector<int>>& groups);
    static ProjectorSet binary(const Projector& p);       // {P, I-P}
    // Spectral projectors of A, eigenvalues clustered within cluster_tol.
    static ProjectorSet eigenspaces(const HermitianOperator& a, double cluster_tol = 1e-8);

    std::size_t size() const { return members_.size(); }
    Index dim() const { return members_.empty() ? 0 : members_.front().dim(); }
    const Projector& operator[](std::size_t k) const { return members_[k]; }
    const std::vector<Projector>& members() const { return members_; }

private:
    struct trusted_tag {};
    ProjectorSet(std::vector<Projector> members, trusted_tag);
    std::vector<Projector> members_;

    friend ProjectorSet trusted_projector_set(std::vector<Projector> members);
};

// Internal: wrap members known to be complete and mutually orthogonal by
// construction, skipping the O(k^2 d^3) cross checks.
ProjectorSet trusted_projector_set(std::vector<Projector> members);

// ---------------------------------------------------------------------------

class DensityMatrix {
public:
    // Hermitian within tol_herm, unit trace within tol_trace, eigenvalues
    // >= -tol_psd. Eigenvalues in [-tol_psd, 0) are treated as 0 downstream.
    explicit DensityMatrix(const Matrix& m);

    static DensityMatrix pure(const StateVector& v);
    static DensityMatrix maximally_mixed(Index dim);

    Index dim() const { return mat_.rows(); }
    const Matrix& matrix() const { return mat_; }

    // W with rho = W W†; columns span the support (eigenvalues > support_tol).
    Matrix factor(double support_tol = 1e-14) const;

private:
    struct trusted_tag {};
    DensityMatrix(Matrix m, trusted_tag);
    Matrix mat_;

    friend DensityMatrix trusted_density(Matrix m);
};

// Internal: wrap a matrix known to be a valid density matrix (symmetrized,
// normalized, PSD by construction) without the O(d^3) re-validation.
DensityMatrix trusted_density(Matrix m);

// ---------------------------------------------------------------------------

struct SpectralDecomposition {
    RealVector eigenvalues;  // descending
    Matrix eigenvectors;     // columns aligned with eigenvalues
};

// Post: reconstruction V Λ V† matches within 1e-10 and V is unitary.
SpectralDecomposition spectral_decompose(const HermitianOperator& a);

// exp(scale · A) through the eigenbasis. Errors if scale·λ_max > exp_overflow.
HermitianOperator herm_exp(const HermitianOperator& a, double scale = 1.0);

// U = exp(+i H t / hbar); unitarity checked to tol_proj.
Matrix evolution_operator(const HermitianOperator& h, double t, double hbar = 1.0);

// P(t) = e^{+iHt/hbar} P e^{-iHt/hbar}; rank is preserved.
Projector heisenberg_evolve(const Projector& p, const HermitianOperator& h,
                            double t, double hbar = 1.0);

// -Tr(rho log rho) in nats; eigenvalues in [-tol_psd, 0) clipped to 0,
// 0·log 0 = 0.
double von_neumann_entropy(const DensityMatrix& rho);

// Re Tr(A rho); |Im| above 1e-10 is a numerical failure.
double expectation(const HermitianOperator& a, const DensityMatrix& rho);
double expectation(const HermitianOperator& a, const StateVector& psi);

} // namespace decohist
