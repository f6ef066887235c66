#include <doctest.h>

#include "decohist/hilbert.hpp"
#include "decohist/random.hpp"

#include "helpers.hpp"

using namespace decohist;
using testutil::kron;
using testutil::pauli_x;
using testutil::pauli_z;

namespace {
const double kLog2 = std::log(2.0);
}

TEST_CASE("state vector construction and overlap") {
    Vector v(2);
    v << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    StateVector plus(v);
    CHECK(plus.dim() == 2);

    // non-unit norm rejected, normalized() fixes it
    Vector bad(2);
    bad << 1.0, 1.0;
    CHECK_THROWS_AS(StateVector{bad}, contract_violation);
    StateVector fixed = StateVector::normalized(bad);
    CHECK(std::abs(fixed.amplitudes().norm() - 1.0) < 1e-14);

    StateVector zero = StateVector::basis_state(2, 0);
    CHECK(std::abs(plus.overlap(zero) - Complex(1.0 / std::sqrt(2.0), 0)) < 1e-14);

    CHECK_THROWS_AS(StateVector::normalized(Vector::Zero(3)), contract_violation);
}

TEST_CASE("hermitian gate symmetrizes small deviations and rejects large ones") {
    Matrix m = pauli_x();
    m(0, 1) += Complex(0, 5e-13);  // within tolerance: symmetrized away
    HermitianOperator a(m);
    CHECK(max_abs(a.matrix() - a.matrix().adjoint()) == 0.0);

    Matrix bad = pauli_x();
    bad(0, 1) += Complex(0, 1e-10);  // beyond tolerance: rejected
    CHECK_THROWS_AS(HermitianOperator{bad}, contract_violation);
}

TEST_CASE("spectral decomposition of the x flip operator") {
    // Hand diagonalization: eigenvalues +1, -1 with eigenvectors (|0>±|1>)/√2.
    HermitianOperator sx{pauli_x()};
    SpectralDecomposition sd = spectral_decompose(sx);
    CHECK(sd.eigenvalues(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sd.eigenvalues(1) == doctest::Approx(-1.0).epsilon(1e-12));
    // descending order, eigenvector defined up to phase: compare projectors
    Vector plus(2);
    plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    Matrix p_plus = plus * plus.adjoint();
    CHECK(max_abs(Matrix(sd.eigenvectors.col(0) * sd.eigenvectors.col(0).adjoint()) - p_plus) <
          1e-12);
}

TEST_CASE("spectral decomposition reconstructs random operators") {
    for (Index dim : {2, 3, 5, 8, 16}) {
        auto eng = rng::engine_for(91, static_cast<std::uint64_t>(dim));
        HermitianOperator a = rng::random_hermitian(dim, eng);
        SpectralDecomposition sd = spectral_decompose(a);
        for (Index k = 0; k + 1 < dim; ++k) CHECK(sd.eigenvalues(k) >= sd.eigenvalues(k + 1));
        CHECK(max_abs(sd.eigenvectors * sd.eigenvalues.asDiagonal() * sd.eigenvectors.adjoint() -
                      a.matrix()) < 1e-10);
    }
}

TEST_CASE("herm_exp matches the closed form on the z generator") {
    HermitianOperator sz{pauli_z()};
    HermitianOperator e = herm_exp(sz, -1.0);  // exp(-σz) = diag(e^{-1}, e)
    Matrix expect(2, 2);
    expect << std::exp(-1.0), 0, 0, std::exp(1.0);
    CHECK(max_abs(e.matrix() - expect) < 1e-14);

    // identity at scale 0
    auto eng = rng::engine_for(92, 0);
    HermitianOperator a = rng::random_hermitian(6, eng);
    CHECK(max_abs(herm_exp(a, 0.0).matrix() - Matrix::Identity(6, 6)) < 1e-12);
}

TEST_CASE("herm_exp rejects overflowing exponents") {
    Matrix big = 800.0 * pauli_z();
    CHECK_THROWS_AS(herm_exp(HermitianOperator{big}, 1.0), numerical_failure);
    CHECK_NOTHROW(herm_exp(HermitianOperator{big}, -1.0 / 800.0));
}

TEST_CASE("heisenberg evolution rotates the +x projector to -x in half a period") {
    // H = (ω/2)σz, t = π/ω: e^{+iHt} = diag(i, -i); conjugation maps |+> to |->.
    const double omega = 2.0;
    HermitianOperator h{Matrix(0.5 * omega * pauli_z())};
    Vector plus(2), minus(2);
    plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    minus << 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0);
    Projector p = Projector::onto(StateVector(plus));
    Projector evolved = heisenberg_evolve(p, h, M_PI / omega);
    CHECK(max_abs(evolved.matrix() - Matrix(minus * minus.adjoint())) < 1e-12);
    CHECK(evolved.rank() == 1);
}

TEST_CASE("heisenberg evolution preserves rank and idempotence for random inputs") {
    for (Index dim : {2, 4, 9, 16}) {
        auto eng = rng::engine_for(93, static_cast<std::uint64_t>(dim));
        HermitianOperator h = rng::random_hermitian(dim, eng);
        Matrix u = rng::haar_unitary(dim, eng);
        Projector p = Projector::onto_columns(u.leftCols(dim / 2 + 1));
        Projector q = heisenberg_evolve(p, h, 0.37);
        CHECK(q.rank() == p.rank());
        CHECK(max_abs(q.matrix() * q.matrix() - q.matrix()) < 1e-12);
    }
}

TEST_CASE("projector gates") {
    // not idempotent
    Matrix half = 0.5 * Matrix::Identity(2, 2);
    CHECK_THROWS_AS(Projector{half}, contract_violation);
    // complement and rank
    Projector p = Projector::onto(StateVector::basis_state(3, 1));
    CHECK(p.rank() == 1);
    CHECK(p.complement().rank() == 2);
    CHECK(Projector::identity(3).rank() == 3);
    CHECK(Projector::zero(3).rank() == 0);
}

TEST_CASE("projector set enforces completeness and exclusivity") {
    Projector p0 = Projector::onto(StateVector::basis_state(2, 0));
    Projector p1 = Projector::onto(StateVector::basis_state(2, 1));
    CHECK_NOTHROW(ProjectorSet({p0, p1}));
    // incomplete
    CHECK_THROWS_AS(ProjectorSet({p0}), contract_violation);
    // overlapping (sums to I but members not orthogonal): P+ with P0,P1 overcounts
    Vector plus(2);
    plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    CHECK_THROWS_AS(ProjectorSet({p0, p1, Projector::onto(StateVector(plus))}),
                    contract_violation);

    ProjectorSet basis = ProjectorSet::from_basis(testutil::fourier_basis(4));
    CHECK(basis.size() == 4);
    ProjectorSet grouped =
        ProjectorSet::from_basis_groups(testutil::fourier_basis(4), {{0, 2}, {1}, {3}});
    CHECK(grouped.size() == 3);
    CHECK(grouped[0].rank() == 2);
    CHECK_THROWS_AS(
        ProjectorSet::from_basis_groups(testutil::fourier_basis(4), {{0, 2}, {1}}),
        contract_violation);
}

TEST_CASE("eigenspace projector set clusters degenerate levels") {
    Matrix m = kron(pauli_z(), Matrix::Identity(2, 2));  // eigenvalues ±1, each twice
    ProjectorSet s = ProjectorSet::eigenspaces(HermitianOperator{m});
    CHECK(s.size() == 2);
    CHECK(s[0].rank() == 2);
    CHECK(s[1].rank() == 2);
}

TEST_CASE("density matrix gates") {
    // trace off
    CHECK_THROWS_AS(DensityMatrix{Matrix(2.0 * Matrix::Identity(2, 2))}, contract_violation);
    // negative eigenvalue beyond tolerance
    Matrix neg(2, 2);
    neg << 1.2, 0, 0, -0.2;
    CHECK_THROWS_AS(DensityMatrix{neg}, contract_violation);
    // tiny negative eigenvalue within tolerance is accepted
    Matrix tiny(2, 2);
    tiny << 1.0 + 5e-11, 0, 0, -5e-11;
    CHECK_NOTHROW(DensityMatrix{tiny});

    DensityMatrix mixed = DensityMatrix::maximally_mixed(4);
    Matrix w = mixed.factor();
    CHECK(max_abs(w * w.adjoint() - mixed.matrix()) < 1e-12);
}

TEST_CASE("entropy of pure, mixed, and unitarily rotated states") {
    auto eng = rng::engine_for(94, 7);
    StateVector psi(rng::haar_vector(5, eng));
    CHECK(von_neumann_entropy(DensityMatrix::pure(psi)) == doctest::Approx(0.0).epsilon(1e-12));

    CHECK(von_neumann_entropy(DensityMatrix::maximally_mixed(7)) ==
          doctest::Approx(std::log(7.0)).epsilon(1e-12));

    // rank-2 equal mixture -> log 2
    Matrix two = Matrix::Zero(5, 5);
    two(0, 0) = 0.5;
    two(3, 3) = 0.5;
    CHECK(von_neumann_entropy(DensityMatrix{two}) == doctest::Approx(kLog2).epsilon(1e-12));

    // unitary invariance and bounds on random states
    for (Index dim : {2, 6, 12}) {
        DensityMatrix rho = rng::random_density(dim, eng);
        const double s = von_neumann_entropy(rho);
        CHECK(s >= 0.0);
        CHECK(s <= std::log(static_cast<double>(dim)) + 1e-12);
        Matrix u = rng::haar_unitary(dim, eng);
        DensityMatrix rotated{Matrix(u * rho.matrix() * u.adjoint())};
        CHECK(von_neumann_entropy(rotated) == doctest::Approx(s).epsilon(1e-9));
    }
}

TEST_CASE("expectation values are real and linear") {
    auto eng = rng::engine_for(95, 3);
    HermitianOperator a = rng::random_hermitian(6, eng);
    HermitianOperator b = rng::random_hermitian(6, eng);
    DensityMatrix rho = rng::random_density(6, eng);
    const double ea = expectation(a, rho);
    const double eb = expectation(b, rho);
    CHECK(expectation(a + b, rho) == doctest::Approx(ea + eb).epsilon(1e-10));
    CHECK(expectation(2.5 * a, rho) == doctest::Approx(2.5 * ea).epsilon(1e-10));

    // pure-state overload agrees with the density-matrix path
    StateVector psi(rng::haar_vector(6, eng));
    CHECK(expectation(a, psi) ==
          doctest::Approx(expectation(a, DensityMatrix::pure(psi))).epsilon(1e-10));

    // identity expectation is the trace/1
    CHECK(expectation(HermitianOperator{Matrix(Matrix::Identity(6, 6))}, rho) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("seeded generators are reproducible and well formed") {
    auto e1 = rng::engine_for(1234, 5);
    auto e2 = rng::engine_for(1234, 5);
    auto e3 = rng::engine_for(1234, 6);
    Matrix u1 = rng::haar_unitary(8, e1);
    Matrix u2 = rng::haar_unitary(8, e2);
    Matrix u3 = rng::haar_unitary(8, e3);
    CHECK(max_abs(u1 - u2) == 0.0);        // same master seed + index: bitwise equal
    CHECK(max_abs(u1 - u3) > 1e-3);        // sibling stream: unrelated
    CHECK(max_abs(u1 * u1.adjoint() - Matrix::Identity(8, 8)) < 1e-12);

    auto e4 = rng::engine_for(1234, 7);
    Vector v = rng::haar_vector(8, e4);
    CHECK(std::abs(v.norm() - 1.0) < 1e-12);
    CHECK_NOTHROW(rng::random_density(8, e4));
}

TEST_CASE("i_commutator is Hermitian and matches the direct formula") {
    auto eng = rng::engine_for(96, 1);
    HermitianOperator a = rng::random_hermitian(5, eng);
    HermitianOperator b = rng::random_hermitian(5, eng);
    HermitianOperator c = i_commutator(a, b);
    Matrix direct = Complex(0, 1) * (a.matrix() * b.matrix() - b.matrix() * a.matrix());
    CHECK(max_abs(c.matrix() - direct) < 1e-12);
    CHECK(max_abs(c.matrix() - c.matrix().adjoint()) < 1e-14);
}
