#pragma once

#include <optional>
#include <vector>

#include "decohist/hilbert.hpp"

namespace decohist {

// Expected-value constraints: find the maximum-entropy state rho_tilde =
// exp(-sum_m lambda_m A_m)/Z with Tr(A_m rho_tilde) = target_m. The operators
// need not commute.
struct ConstraintSet {
    std::vector<HermitianOperator> operators;
    RealVector targets;

    // Validates: at least one operator, shared dimension, one finite target
    // per operator.
    ConstraintSet(std::vector<HermitianOperator> ops, RealVector target_values);

    // Targets read off a state: target_m = Tr(A_m rho).
    static ConstraintSet from_state(std::vector<HermitianOperator> ops,
                                    const DensityMatrix& rho);

    Index dim() const { return operators.front().dim(); }
    std::size_t size() const { return operators.size(); }
};

struct MaxEntOptions {
    double tol         = 1e-10;  // convergence: max_m |Tr(A_m rho_tilde) - target_m|
    int max_iter       = 200;
    // Targets closer than this to an extreme eigenvalue of their operator are
    // rejected up front as boundary targets (the multipliers would diverge).
    // Operators with eigenvalue spread below 1e-9 are exempt: their expected
    // value is fixed, the target must simply agree with it.
    double feasibility_margin = 1e-6;
};

struct MaxEntSolution {
    RealVector multipliers;
    DensityMatrix rho_tilde;
    double entropy;        // -Tr(rho_tilde log rho_tilde), nats
    double partition_log;  // log Z
    double residual;       // max_m |Tr(A_m rho_tilde) - target_m|
    int iterations;
};

// Damped Newton descent on the convex dual  log Z(lambda) + lambda . targets,
// started from lambda = 0 (maximal ignorance). The gradient is
// targets - <A>_lambda and the Hessian is the (positive semidefinite)
// generalized covariance of the constraint operators; singular Hessians are
// handled by a pseudo-inverse Newton direction with a gradient fallback, and
// steps are backtracked until the dual decreases.
// Errors: linearly dependent operators -> degenerate_constraint_error (rank
// check on the operator Gram matrix at 1e-10); boundary or infeasible targets
// -> boundary_error, either up front (feasibility margin) or through multiplier
// divergence / iteration exhaustion.
MaxEntSolution solve_multipliers(const ConstraintSet& constraints,
                                 const MaxEntOptions& opts = {});

// Missing information about rho given only the expected values of ops:
// solve_multipliers with targets read off rho, returning the entropy. Always
// at least the von Neumann entropy of rho (enforced within 1e-9).
double missing_information(const std::vector<HermitianOperator>& ops,
                           const DensityMatrix& rho, const MaxEntOptions& opts = {});

// Variant for states whose targets may sit exactly on eigenvalue boundaries
// (e.g. a product state with extremal cell occupations, where the plain solve
// would reject). A target pinned to an extreme eigenvalue (within pin_tol)
// forces the state into that eigenspace; the solve is restricted there, with
// constraints that became fixed or linearly dependent on the subspace dropped.
// The result is exact for exactly-pinned targets and slightly conservative
// (never above the unrestricted supremum) otherwise.
struct ReducedMaxEnt {
    double entropy;
    double residual;     // restricted-solve residual; 0 when reduced_dim == 1
    Index reduced_dim;
    int iterations;
};
ReducedMaxEnt missing_information_reduced(const std::vector<HermitianOperator>& ops,
                                          const DensityMatrix& rho,
                                          const MaxEntOptions& opts = {},
                                          double pin_tol = 1e-9);

// Same computation for a trajectory of states against one fixed constraint
// list: the operator spectra needed for boundary detection (and the pruned
// operator list used when nothing is pinned) are computed once up front
// instead of at every call.
class BoundaryReducedSolver {
public:
    explicit BoundaryReducedSolver(std::vector<HermitianOperator> ops, MaxEntOptions opts = {},
                                   double pin_tol = 1e-9);

    ReducedMaxEnt solve(const DensityMatrix& rho) const;

    Index dim() const { return operators_.front().dim(); }

private:
    std::vector<HermitianOperator> operators_;
    MaxEntOptions opts_;
    double pin_tol_;
    std::vector<double> spectrum_high_, spectrum_low_;  // full-space extremes
    std::vector<HermitianOperator> unpinned_constraints_;  // pre-deduped fast path
};

// ---------------------------------------------------------------------------

// Global equilibrium exp[-beta(H - velocity.momenta - mu*number)] / Z,
// evaluated through the shifted spectrum so it never overflows. beta = 0 gives
// the maximally mixed state.
DensityMatrix equilibrium_density(const HermitianOperator& h, double beta,
                                  const std::vector<HermitianOperator>& momenta = {},
                                  const RealVector& velocity = RealVector(),
                                  const std::optional<HermitianOperator>& number = {},
                                  double mu = 0.0);

// Conserved-quantity averages attached to one spatial cell. local_dim is the
// Hilbert dimension of the cell itself (needed to apportion entropy per cell).
struct CellOperators {
    HermitianOperator energy;
    std::vector<HermitianOperator> momenta;
    std::optional<HermitianOperator> number;
    Index local_dim = 0;
};

struct CellFields {
    double beta = 0.0;
    RealVector velocity = RealVector();  // one entry per cell momentum operator
    double mu = 0.0;
};

// Z^{-1} exp[-sum_y beta_y (energy_y - velocity_y . momenta_y - mu_y number_y)].
DensityMatrix local_equilibrium_density(const std::vector<CellOperators>& cells,
                                        const std::vector<CellFields>& fields);

// Inverse problem: the maximum-entropy state matching Tr(op rho) for every
// cell operator, with the multipliers reparametrized per cell as
// lambda_energy = beta, lambda_momentum = -beta*velocity, lambda_number =
// -beta*mu. The field extraction is gauge-ambiguous at beta = 0, so fields are
// reported only where |beta| > 1e-9; raw multipliers are always available.
struct LocalEquilibriumFit {
    MaxEntSolution solution;         // multipliers in cell-block order
    std::vector<CellFields> fields;
    std::vector<bool> fields_defined;
};
LocalEquilibriumFit fit_local_equilibrium(const std::vector<CellOperators>& cells,
                                          const DensityMatrix& rho,
                                          const MaxEntOptions& opts = {});

// Checks S = beta(<H> - F) with F defined through
// Tr exp[-beta(H - U.P - mu N)] = exp[-beta(F - U.<P> - mu <N>)].
// Degenerate at beta = 0 (F undefined) -> contract_violation.
struct ThermoRelation {
    double entropy;
    double free_energy;
    double gap;  // |S - beta(<H> - F)|
};
ThermoRelation thermo_relation_check(const HermitianOperator& h, double beta,
                                     const std::vector<HermitianOperator>& momenta = {},
                                     const RealVector& velocity = RealVector(),
                                     const std::optional<HermitianOperator>& number = {},
                                     double mu = 0.0);

// Splits the entropy of a local-equilibrium state into per-cell contributions
// sigma_y = -<X_y> + log Tr exp(X_y) + log(local_dim_y / dim), where X_y is
// cell y's exponent block. The contributions sum to the exact entropy when the
// cell exponents commute (tensor-product case); otherwise the non-commuting
// remainder is reported, not hidden.
struct EntropyDecomposition {
    std::vector<double> contributions;
    double total_entropy;  // von Neumann entropy of rho_leq
    double residual;       // sum(contributions) - total_entropy
};
EntropyDecomposition entropy_density_decomposition(const std::vector<CellOperators>& cells,
                                                   const std::vector<CellFields>& fields,
                                                   const DensityMatrix& rho_leq);

} // namespace decohist
