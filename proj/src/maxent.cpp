#include "decohist/maxent.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "decohist/errors.hpp"

namespace decohist {

namespace {

constexpr double gram_rank_tol      = 1e-10;  // relative rank cutoff for operator Gram matrices
constexpr double zero_spread_tol    = 1e-9;   // spread below which an operator is constant
constexpr double multiplier_cap     = 1e8;    // |lambda| beyond this: target is at the boundary
constexpr double field_gauge_tol    = 1e-9;   // |beta| below which velocity and mu are pure gauge
constexpr double identity_check_tol = 1e-8;   // S = log Z + lambda.<A> self-check
constexpr double armijo_slope       = 1e-4;   // sufficient-decrease fraction
constexpr double min_step           = 1e-14;  // line-search floor

void validate_options(const MaxEntOptions& opts) {
    if (!(opts.tol > 0.0) || !std::isfinite(opts.tol))
        throw contract_violation("maxent: tol must be positive and finite");
    if (opts.max_iter < 1)
        throw contract_violation("maxent: max_iter must be at least 1");
    if (!(opts.feasibility_margin >= 0.0) || !std::isfinite(opts.feasibility_margin))
        throw contract_violation("maxent: feasibility_margin must be nonnegative and finite");
}

// (e^a - e^b)/(a - b), continued to e^a on the diagonal. The near-coincident
// branch avoids the 0/0 cancellation; both branches are safe for the shifted
// spectra used here (a, b <= 0).
double exp_divided_difference(double a, double b) {
    const double d = a - b;
    if (std::abs(d) < 1e-6) return std::exp(0.5 * (a + b)) * (1.0 + d * d / 24.0);
    return (std::exp(a) - std::exp(b)) / d;
}

// The Newton core below is templated on the matrix scalar so that all-real
// constraint sets (every spin-chain observable in the models module) run in
// real arithmetic end to end: the eigensolves and basis rotations dominate
// the cost and are roughly four times cheaper without complex multiplies.

template <typename Mat>
struct TypedSpectral {
    RealVector eigenvalues;  // descending
    Mat eigenvectors;        // columns aligned with the eigenvalues
};

template <typename Mat>
TypedSpectral<Mat> typed_decompose(const Mat& k) {
    Eigen::SelfAdjointEigenSolver<Mat> es(k);
    if (es.info() != Eigen::Success)
        throw numerical_failure("maxent: exponent eigendecomposition failed");
    TypedSpectral<Mat> sd;
    sd.eigenvalues = es.eigenvalues().reverse();
    sd.eigenvectors = es.eigenvectors().rowwise().reverse();
    const double scale = std::max(1.0, k.cwiseAbs().maxCoeff());
    const double defect = (sd.eigenvectors * sd.eigenvalues.asDiagonal() *
                               sd.eigenvectors.adjoint() -
                           k)
                              .cwiseAbs()
                              .maxCoeff();
    if (defect > 1e-10 * scale)
        throw numerical_failure("maxent: exponent spectral reconstruction exceeds tolerance");
    return sd;
}

// Everything about one multiplier vector that the descent needs:
// K = -sum_m lambda_m A_m diagonalized, with the spectrum shifted by its
// maximum so the Boltzmann weights never overflow.
template <typename Mat>
struct DualPoint {
    TypedSpectral<Mat> exponent;
    RealVector shifted;        // eigenvalues - top (<= 0), descending
    double weight_sum = 0.0;   // sum exp(shifted)
    double partition_log = 0.0;
    RealVector probabilities;  // exp(shifted) / weight_sum
};

template <typename Mat>
DualPoint<Mat> evaluate_exponent(const std::vector<Mat>& ops, const RealVector& lambda) {
    const Index d = ops.front().rows();
    Mat k = Mat::Zero(d, d);
    for (std::size_t m = 0; m < ops.size(); ++m)
        k -= lambda(static_cast<Index>(m)) * ops[m];
    DualPoint<Mat> point;
    point.exponent = typed_decompose(k);
    const double top = point.exponent.eigenvalues(0);
    point.shifted = point.exponent.eigenvalues.array() - top;
    const RealVector weights = point.shifted.array().exp();
    point.weight_sum = weights.sum();
    point.partition_log = top + std::log(point.weight_sum);
    point.probabilities = weights / point.weight_sum;
    return point;
}

// The convex dual being minimized: log Z(lambda) + lambda . targets.
template <typename Mat>
double dual_value(const DualPoint<Mat>& point, const RealVector& lambda,
                  const RealVector& targets) {
    return point.partition_log + lambda.dot(targets);
}

// Constraint operators rotated into the exponent eigenbasis, plus their
// expected values under the current Boltzmann weights.
template <typename Mat>
struct MomentData {
    std::vector<Mat> rotated;  // V† A_m V
    RealVector moments;        // Tr(A_m rho_lambda)
};

template <typename Mat>
MomentData<Mat> compute_moments(const std::vector<Mat>& ops, const DualPoint<Mat>& point) {
    MomentData<Mat> md;
    md.rotated.reserve(ops.size());
    md.moments.resize(static_cast<Index>(ops.size()));
    for (std::size_t m = 0; m < ops.size(); ++m) {
        Mat t = point.exponent.eigenvectors.adjoint() * ops[m] * point.exponent.eigenvectors;
        md.moments(static_cast<Index>(m)) =
            t.diagonal().real().cwiseProduct(point.probabilities).sum();
        md.rotated.push_back(std::move(t));
    }
    return md;
}

// Hessian of the dual: the generalized (Kubo) covariance of the constraint
// operators under rho_lambda,
//   H_ml = sum_ab (V†A_m V)_ab conj((V†A_l V)_ab) phi(x_a, x_b)/Z - <A_m><A_l>,
// real symmetric and positive semidefinite.
template <typename Mat>
RealMatrix dual_hessian(const MomentData<Mat>& md, const DualPoint<Mat>& point) {
    constexpr bool complex_ops = !std::is_same_v<typename Mat::Scalar, double>;
    const Index d = point.shifted.size();
    const Index m_count = static_cast<Index>(md.rotated.size());
    Eigen::ArrayXXd phi(d, d);
    for (Index a = 0; a < d; ++a)
        for (Index b = 0; b < d; ++b)
            phi(a, b) = exp_divided_difference(point.shifted(a), point.shifted(b)) /
                        point.weight_sum;
    std::vector<Eigen::ArrayXXd> re(md.rotated.size()), im;
    if constexpr (complex_ops) im.resize(md.rotated.size());
    for (std::size_t m = 0; m < md.rotated.size(); ++m) {
        re[m] = md.rotated[m].real().array();
        if constexpr (complex_ops) im[m] = md.rotated[m].imag().array();
    }
    RealMatrix hess(m_count, m_count);
    for (Index m = 0; m < m_count; ++m)
        for (Index l = 0; l <= m; ++l) {
            const std::size_t um = static_cast<std::size_t>(m);
            const std::size_t ul = static_cast<std::size_t>(l);
            double v = (phi * (re[um] * re[ul])).sum();
            if constexpr (complex_ops) v += (phi * (im[um] * im[ul])).sum();
            hess(m, l) = hess(l, m) = v - md.moments(m) * md.moments(l);
        }
    return hess;
}

// Newton direction through the eigendecomposition, dropping directions whose
// curvature is below a relative cutoff (the Hessian is singular whenever the
// constraints carry a shared identity component).
RealVector pseudo_solve(const RealMatrix& hess, const RealVector& grad) {
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(hess);
    if (es.info() != Eigen::Success)
        throw numerical_failure("maxent: Hessian eigendecomposition failed");
    const RealVector& w = es.eigenvalues();  // ascending
    const double cutoff = 1e-12 * std::max(w(w.size() - 1), 1.0);
    RealVector step = RealVector::Zero(grad.size());
    for (Index k = 0; k < w.size(); ++k)
        if (w(k) > cutoff)
            step += es.eigenvectors().col(k) * (es.eigenvectors().col(k).dot(grad) / w(k));
    return step;
}

// Reject linearly dependent constraint operators up front: the multipliers
// would be non-unique and the caller almost certainly built the set wrong.
void check_independent(const std::vector<HermitianOperator>& ops) {
    const Index m_count = static_cast<Index>(ops.size());
    RealMatrix gram(m_count, m_count);
    for (Index m = 0; m < m_count; ++m)
        for (Index l = 0; l <= m; ++l) {
            const double v = ops[static_cast<std::size_t>(m)]
                                 .matrix()
                                 .cwiseProduct(ops[static_cast<std::size_t>(l)].matrix().conjugate())
                                 .sum()
                                 .real();  // Re Tr(A_m A_l)
            gram(m, l) = gram(l, m) = v;
        }
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(gram, Eigen::EigenvaluesOnly);
    const double top = es.eigenvalues()(m_count - 1);
    if (es.eigenvalues()(0) <= gram_rank_tol * std::max(1.0, top))
        throw degenerate_constraint_error(
            "maxent: constraint operators are linearly dependent");
}

// Feasibility screen. Targets of effectively constant operators must agree
// with the fixed value and are snapped onto it exactly — otherwise the
// constraint would contribute a permanent residual floor and the iteration
// could never converge. All other targets must sit at least `margin` inside
// the attainable interval [lambda_min, lambda_max] of their operator.
RealVector screened_targets(const ConstraintSet& constraints, double margin) {
    RealVector targets = constraints.targets;
    for (std::size_t m = 0; m < constraints.size(); ++m) {
        const SpectralDecomposition sd = spectral_decompose(constraints.operators[m]);
        const double hi = sd.eigenvalues(0);
        const double lo = sd.eigenvalues(sd.eigenvalues.size() - 1);
        if (hi - lo <= zero_spread_tol) {
            const double fixed = 0.5 * (hi + lo);
            if (std::abs(targets(static_cast<Index>(m)) - fixed) > zero_spread_tol)
                throw boundary_error(
                    "maxent: target for a constant operator differs from its only "
                    "attainable value");
            targets(static_cast<Index>(m)) = fixed;
        } else if (targets(static_cast<Index>(m)) < lo + margin ||
                   targets(static_cast<Index>(m)) > hi - margin) {
            throw boundary_error(
                "maxent: target within the feasibility margin of an extreme eigenvalue; "
                "the multipliers would diverge");
        }
    }
    return targets;
}

Vector vectorized(const Matrix& m) {
    return Eigen::Map<const Vector>(m.data(), m.size());
}

// Gram–Schmidt register of vectorized operators, seeded with the identity:
// admit() keeps an operator only if it is linearly independent of the
// identity and everything admitted before it (dependent constraints are
// implied by the kept ones whenever the targets come from a common state).
class OperatorBasis {
public:
    explicit OperatorBasis(Index dim) { admit(Matrix::Identity(dim, dim)); }

    bool admit(const Matrix& m) {
        Vector v = vectorized(m);
        const double original = v.norm();
        if (original <= 1e-14) return false;
        for (int pass = 0; pass < 2; ++pass)  // twice for numerical orthogonality
            for (const auto& e : basis_) v -= e.dot(v) * e;
        if (v.norm() <= gram_rank_tol * original) return false;
        basis_.push_back(v.normalized());
        return true;
    }

private:
    std::vector<Vector> basis_;
};

// Result of the dual minimization, scalar-type erased: the state is handed
// back complex regardless of which arithmetic produced it.
struct NewtonOutcome {
    RealVector lambda;
    double entropy = 0.0;
    double partition_log = 0.0;
    double residual = 0.0;
    int iterations = 0;
    Matrix rho;
};

template <typename Mat>
NewtonOutcome newton_solve(const std::vector<Mat>& ops, const RealVector& targets,
                           const MaxEntOptions& opts) {
    RealVector lambda = RealVector::Zero(targets.size());  // start from maximal ignorance
    DualPoint<Mat> point = evaluate_exponent(ops, lambda);
    MomentData<Mat> md = compute_moments(ops, point);
    int iterations = 0;
    double residual = (targets - md.moments).cwiseAbs().maxCoeff();

    while (residual > opts.tol) {
        if (iterations >= opts.max_iter)
            throw boundary_error(
                "maxent: no convergence after " + std::to_string(opts.max_iter) +
                " iterations; the targets are likely too close to the attainable boundary");
        const RealVector grad = targets - md.moments;
        RealVector step = pseudo_solve(dual_hessian(md, point), grad);
        bool steepest = false;
        if (grad.dot(step) <= 1e-14 * grad.squaredNorm()) {
            step = grad;  // singular curvature: fall back to steepest descent
            steepest = true;
        }

        const double base = dual_value(point, lambda, targets);
        bool accepted = false;
        while (!accepted) {
            const double slope = grad.dot(step);
            // Terminal regime: once the predicted decrease sinks below the
            // roundoff noise of the dual value itself, the Armijo comparison
            // is decided by rounding luck and can stall the iteration. A small
            // full step is the plain Newton update and converges quadratically.
            if (armijo_slope * slope <= 1e-14 * std::max(1.0, std::abs(base)) &&
                step.cwiseAbs().maxCoeff() <=
                    1e-3 * std::max(1.0, lambda.cwiseAbs().maxCoeff())) {
                lambda -= step;
                point = evaluate_exponent(ops, lambda);
                accepted = true;
                break;
            }
            double alpha = 1.0;
            while (alpha >= min_step) {
                RealVector trial = lambda - alpha * step;
                DualPoint<Mat> trial_point = evaluate_exponent(ops, trial);
                if (dual_value(trial_point, trial, targets) <=
                    base - armijo_slope * alpha * slope) {
                    lambda = std::move(trial);
                    point = std::move(trial_point);
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted) {
                if (steepest)
                    throw numerical_failure("maxent: line search failed to decrease the dual");
                step = grad;  // Newton direction stalled; retry along the gradient
                steepest = true;
            }
        }
        if (lambda.cwiseAbs().maxCoeff() > multiplier_cap)
            throw boundary_error(
                "maxent: multipliers diverged; the targets are at or beyond the attainable "
                "boundary");
        md = compute_moments(ops, point);
        residual = (targets - md.moments).cwiseAbs().maxCoeff();
        ++iterations;
    }

    NewtonOutcome out;
    // S = log Zhat - sum_a p_a xhat_a, in the shifted spectrum (exact under
    // the shift because the probabilities are normalized).
    out.entropy =
        std::log(point.weight_sum) - point.probabilities.cwiseProduct(point.shifted).sum();
    // Independent route to the same number through the rotated moments; a gap
    // here means the eigenbasis quantities have lost coherence.
    const double via_moments = point.partition_log + lambda.dot(md.moments);
    if (std::abs(out.entropy - via_moments) > identity_check_tol)
        throw numerical_failure("maxent: entropy identity self-check failed (gap " +
                                std::to_string(std::abs(out.entropy - via_moments)) + ")");
    out.partition_log = point.partition_log;
    out.residual = residual;
    out.iterations = iterations;
    const Mat rho = point.exponent.eigenvectors * point.probabilities.asDiagonal() *
                    point.exponent.eigenvectors.adjoint();
    out.rho = rho.template cast<Complex>();
    out.lambda = std::move(lambda);
    return out;
}

// Dispatch on the scalar content: constraint sets whose matrices carry no
// imaginary part at all run the whole iteration in real arithmetic.
NewtonOutcome run_newton(const std::vector<HermitianOperator>& ops, const RealVector& targets,
                         const MaxEntOptions& opts) {
    bool all_real = true;
    for (const auto& op : ops)
        if (op.matrix().imag().cwiseAbs().maxCoeff() != 0.0) {
            all_real = false;
            break;
        }
    if (all_real) {
        std::vector<RealMatrix> mats;
        mats.reserve(ops.size());
        for (const auto& op : ops) mats.push_back(op.matrix().real());
        return newton_solve(mats, targets, opts);
    }
    std::vector<Matrix> mats;
    mats.reserve(ops.size());
    for (const auto& op : ops) mats.push_back(op.matrix());
    return newton_solve(mats, targets, opts);
}

}  // namespace

// ------------------------------------------------------------- ConstraintSet

ConstraintSet::ConstraintSet(std::vector<HermitianOperator> ops, RealVector target_values)
    : operators(std::move(ops)), targets(std::move(target_values)) {
    if (operators.empty())
        throw contract_violation("maxent: constraint set needs at least one operator");
    const Index d = operators.front().dim();
    for (const auto& a : operators)
        if (a.dim() != d)
            throw contract_violation("maxent: constraint operators must share one dimension");
    if (static_cast<std::size_t>(targets.size()) != operators.size())
        throw contract_violation("maxent: exactly one target per constraint operator required");
    for (Index m = 0; m < targets.size(); ++m)
        if (!std::isfinite(targets(m)))
            throw contract_violation("maxent: constraint targets must be finite");
}

ConstraintSet ConstraintSet::from_state(std::vector<HermitianOperator> ops,
                                        const DensityMatrix& rho) {
    RealVector targets(static_cast<Index>(ops.size()));
    for (std::size_t m = 0; m < ops.size(); ++m)
        targets(static_cast<Index>(m)) = expectation(ops[m], rho);
    return ConstraintSet(std::move(ops), std::move(targets));
}

// ----------------------------------------------------------- the dual solve

MaxEntSolution solve_multipliers(const ConstraintSet& constraints, const MaxEntOptions& opts) {
    validate_options(opts);
    check_independent(constraints.operators);
    const RealVector targets = screened_targets(constraints, opts.feasibility_margin);
    NewtonOutcome out = run_newton(constraints.operators, targets, opts);
    return MaxEntSolution{std::move(out.lambda),
                          trusted_density(0.5 * (out.rho + out.rho.adjoint())), out.entropy,
                          out.partition_log, out.residual, out.iterations};
}

double missing_information(const std::vector<HermitianOperator>& ops, const DensityMatrix& rho,
                           const MaxEntOptions& opts) {
    const MaxEntSolution sol = solve_multipliers(ConstraintSet::from_state(ops, rho), opts);
    if (sol.entropy < von_neumann_entropy(rho) - 1e-9)
        throw numerical_failure(
            "maxent: computed missing information fell below the state entropy");
    return sol.entropy;
}

// ------------------------------------------------------- boundary reduction

ReducedMaxEnt missing_information_reduced(const std::vector<HermitianOperator>& ops,
                                          const DensityMatrix& rho, const MaxEntOptions& opts,
                                          double pin_tol) {
    validate_options(opts);
    if (!(pin_tol > 0.0) || !std::isfinite(pin_tol))
        throw contract_violation("maxent: pin_tol must be positive and finite");
    if (ops.empty())
        throw contract_violation("maxent: constraint set needs at least one operator");
    const Index full_dim = rho.dim();
    for (const auto& a : ops)
        if (a.dim() != full_dim)
            throw contract_violation("maxent: operator dimension does not match the state");

    // Isometry onto the current subspace; pinning multiplies in further
    // eigenspace restrictions until no target sits on an extreme eigenvalue.
    Matrix q = Matrix::Identity(full_dim, full_dim);

    const auto restricted_state = [&rho](const Matrix& iso) {
        Matrix rr = iso.adjoint() * rho.matrix() * iso;
        const double weight = rr.trace().real();
        if (weight <= 1e-12)
            throw numerical_failure(
                "maxent: the state carries no weight in the pinned eigenspace");
        rr /= weight;
        return Matrix(0.5 * (rr + rr.adjoint()));
    };

    bool pinned = true;
    while (pinned && q.cols() > 1) {
        pinned = false;
        const Matrix rr = restricted_state(q);
        for (const auto& op : ops) {
            const Matrix b = q.adjoint() * op.matrix() * q;
            const SpectralDecomposition sd = spectral_decompose(HermitianOperator::trusted(b));
            const Index r = q.cols();
            const double hi = sd.eigenvalues(0);
            const double lo = sd.eigenvalues(r - 1);
            const double spread = hi - lo;
            if (spread <= zero_spread_tol) continue;  // constant here; nothing to pin
            const double target = b.cwiseProduct(rr.conjugate()).sum().real();  // Tr(B rho_r)
            double pin_at;
            if (std::abs(target - hi) <= pin_tol)
                pin_at = hi;
            else if (std::abs(target - lo) <= pin_tol)
                pin_at = lo;
            else
                continue;
            const double window = 1e-8 * std::max(1.0, spread);
            std::vector<Index> cluster;
            for (Index k = 0; k < r; ++k)
                if (std::abs(sd.eigenvalues(k) - pin_at) <= window) cluster.push_back(k);
            if (cluster.size() == static_cast<std::size_t>(r))
                continue;  // the "extreme" eigenspace is everything; no reduction
            Matrix w(r, static_cast<Index>(cluster.size()));
            for (std::size_t j = 0; j < cluster.size(); ++j)
                w.col(static_cast<Index>(j)) = sd.eigenvectors.col(cluster[j]);
            q = q * w;
            pinned = true;
            break;  // restart the scan on the smaller subspace
        }
    }

    const Index reduced_dim = q.cols();
    if (reduced_dim == 1) return ReducedMaxEnt{0.0, 0.0, 1, 0};

    const DensityMatrix rho_r = trusted_density(restricted_state(q));

    // Restricted constraints: drop operators that became constant, then drop
    // anything linearly dependent on the identity and the operators already
    // kept (their constraints are implied; keeping them would trip the
    // degeneracy gate for no reason).
    OperatorBasis basis(reduced_dim);
    std::vector<HermitianOperator> kept;
    for (const auto& op : ops) {
        HermitianOperator b = HermitianOperator::trusted(q.adjoint() * op.matrix() * q);
        const SpectralDecomposition sd = spectral_decompose(b);
        if (sd.eigenvalues(0) - sd.eigenvalues(reduced_dim - 1) <= zero_spread_tol) continue;
        if (!basis.admit(b.matrix())) continue;
        kept.push_back(std::move(b));
    }
    if (kept.empty())
        return ReducedMaxEnt{std::log(static_cast<double>(reduced_dim)), 0.0, reduced_dim, 0};

    MaxEntOptions reduced_opts = opts;
    reduced_opts.feasibility_margin = 0.5 * pin_tol;  // pinning already peeled the boundary
    const MaxEntSolution sol =
        solve_multipliers(ConstraintSet::from_state(std::move(kept), rho_r), reduced_opts);
    return ReducedMaxEnt{sol.entropy, sol.residual, reduced_dim, sol.iterations};
}

BoundaryReducedSolver::BoundaryReducedSolver(std::vector<HermitianOperator> ops,
                                             MaxEntOptions opts, double pin_tol)
    : operators_(std::move(ops)), opts_(opts), pin_tol_(pin_tol) {
    validate_options(opts_);
    if (!(pin_tol_ > 0.0) || !std::isfinite(pin_tol_))
        throw contract_violation("maxent: pin_tol must be positive and finite");
    if (operators_.empty())
        throw contract_violation("maxent: constraint set needs at least one operator");
    const Index d = operators_.front().dim();
    for (const auto& a : operators_)
        if (a.dim() != d)
            throw contract_violation("maxent: constraint operators must share one dimension");
    spectrum_high_.reserve(operators_.size());
    spectrum_low_.reserve(operators_.size());
    // The same pruning the reduction applies on the unrestricted space, done
    // once: constant operators can never pin, dependent operators are implied.
    OperatorBasis basis(d);
    for (const auto& op : operators_) {
        const SpectralDecomposition sd = spectral_decompose(op);
        const double hi = sd.eigenvalues(0);
        const double lo = sd.eigenvalues(d - 1);
        spectrum_high_.push_back(hi);
        spectrum_low_.push_back(lo);
        if (hi - lo <= zero_spread_tol) continue;
        if (!basis.admit(op.matrix())) continue;
        unpinned_constraints_.push_back(op);
    }
}

ReducedMaxEnt BoundaryReducedSolver::solve(const DensityMatrix& rho) const {
    const Index d = operators_.front().dim();
    if (rho.dim() != d)
        throw contract_violation("maxent: operator dimension does not match the state");
    // With the extreme eigenvalues cached, one pass of expectations decides
    // whether any eigenspace restriction could fire. The test is conservative:
    // a candidate pin is handed to the full reduction, which may still reject
    // it (an "extreme" level whose cluster spans the whole space).
    for (std::size_t m = 0; m < operators_.size(); ++m) {
        if (spectrum_high_[m] - spectrum_low_[m] <= zero_spread_tol) continue;
        const double target = expectation(operators_[m], rho);
        if (std::abs(target - spectrum_high_[m]) <= pin_tol_ ||
            std::abs(target - spectrum_low_[m]) <= pin_tol_)
            return missing_information_reduced(operators_, rho, opts_, pin_tol_);
    }
    if (unpinned_constraints_.empty())
        return ReducedMaxEnt{std::log(static_cast<double>(d)), 0.0, d, 0};
    RealVector targets(static_cast<Index>(unpinned_constraints_.size()));
    for (std::size_t m = 0; m < unpinned_constraints_.size(); ++m)
        targets(static_cast<Index>(m)) = expectation(unpinned_constraints_[m], rho);
    MaxEntOptions reduced_opts = opts_;
    reduced_opts.feasibility_margin = 0.5 * pin_tol_;  // targets cleared the pin scan
    const NewtonOutcome out = run_newton(unpinned_constraints_, targets, reduced_opts);
    return ReducedMaxEnt{out.entropy, out.residual, d, out.iterations};
}

// ------------------------------------------------------ equilibrium builders

namespace {

// -beta (H - velocity . momenta - mu N), validated.
Matrix equilibrium_exponent(const HermitianOperator& h, double beta,
                            const std::vector<HermitianOperator>& momenta,
                            const RealVector& velocity,
                            const std::optional<HermitianOperator>& number, double mu) {
    if (!std::isfinite(beta))
        throw contract_violation("maxent: beta must be finite");
    if (static_cast<std::size_t>(velocity.size()) != momenta.size())
        throw contract_violation(
            "maxent: exactly one velocity component per momentum operator required");
    for (Index k = 0; k < velocity.size(); ++k)
        if (!std::isfinite(velocity(k)))
            throw contract_violation("maxent: velocity components must be finite");
    if (!std::isfinite(mu))
        throw contract_violation("maxent: mu must be finite");
    const Index d = h.dim();
    Matrix x = h.matrix();
    for (std::size_t k = 0; k < momenta.size(); ++k) {
        if (momenta[k].dim() != d)
            throw contract_violation("maxent: momentum operator dimension mismatch");
        x -= velocity(static_cast<Index>(k)) * momenta[k].matrix();
    }
    if (number) {
        if (number->dim() != d)
            throw contract_violation("maxent: number operator dimension mismatch");
        x -= mu * number->matrix();
    } else if (mu != 0.0) {
        throw contract_violation("maxent: a chemical potential requires a number operator");
    }
    return Matrix((-beta) * x);
}

// exp(X)/Tr exp(X) through the shifted spectrum; never overflows, and beta = 0
// lands exactly on the maximally mixed state.
DensityMatrix boltzmann_state(const Matrix& exponent) {
    const SpectralDecomposition sd = spectral_decompose(HermitianOperator::trusted(exponent));
    RealVector weights = (sd.eigenvalues.array() - sd.eigenvalues(0)).exp();
    weights /= weights.sum();
    const Matrix m = sd.eigenvectors * weights.asDiagonal() * sd.eigenvectors.adjoint();
    return trusted_density(0.5 * (m + m.adjoint()));
}

// Shared validation + exponent for one cell: -beta_y (e_y - u_y.p_y - mu_y n_y).
Matrix cell_exponent(const CellOperators& cell, const CellFields& field, Index d) {
    if (cell.energy.dim() != d)
        throw contract_violation("maxent: cell operator dimension mismatch");
    if (!std::isfinite(field.beta))
        throw contract_violation("maxent: cell beta must be finite");
    if (static_cast<std::size_t>(field.velocity.size()) != cell.momenta.size())
        throw contract_violation(
            "maxent: exactly one velocity component per cell momentum operator required");
    Matrix block = cell.energy.matrix();
    for (std::size_t k = 0; k < cell.momenta.size(); ++k) {
        if (cell.momenta[k].dim() != d)
            throw contract_violation("maxent: cell momentum operator dimension mismatch");
        if (!std::isfinite(field.velocity(static_cast<Index>(k))))
            throw contract_violation("maxent: cell velocity components must be finite");
        block -= field.velocity(static_cast<Index>(k)) * cell.momenta[k].matrix();
    }
    if (!std::isfinite(field.mu))
        throw contract_violation("maxent: cell mu must be finite");
    if (cell.number) {
        if (cell.number->dim() != d)
            throw contract_violation("maxent: cell number operator dimension mismatch");
        block -= field.mu * cell.number->matrix();
    } else if (field.mu != 0.0) {
        throw contract_violation("maxent: a cell chemical potential requires a number operator");
    }
    return Matrix((-field.beta) * block);
}

void validate_cells(const std::vector<CellOperators>& cells, std::size_t field_count) {
    if (cells.empty())
        throw contract_violation("maxent: at least one cell required");
    if (field_count != cells.size())
        throw contract_violation("maxent: exactly one field set per cell required");
}

}  // namespace

DensityMatrix equilibrium_density(const HermitianOperator& h, double beta,
                                  const std::vector<HermitianOperator>& momenta,
                                  const RealVector& velocity,
                                  const std::optional<HermitianOperator>& number, double mu) {
    return boltzmann_state(equilibrium_exponent(h, beta, momenta, velocity, number, mu));
}

DensityMatrix local_equilibrium_density(const std::vector<CellOperators>& cells,
                                        const std::vector<CellFields>& fields) {
    validate_cells(cells, fields.size());
    const Index d = cells.front().energy.dim();
    Matrix x = Matrix::Zero(d, d);
    for (std::size_t y = 0; y < cells.size(); ++y) x += cell_exponent(cells[y], fields[y], d);
    return boltzmann_state(x);
}

LocalEquilibriumFit fit_local_equilibrium(const std::vector<CellOperators>& cells,
                                          const DensityMatrix& rho, const MaxEntOptions& opts) {
    if (cells.empty())
        throw contract_violation("maxent: at least one cell required");
    std::vector<HermitianOperator> ops;
    for (const auto& cell : cells) {
        ops.push_back(cell.energy);
        for (const auto& p : cell.momenta) ops.push_back(p);
        if (cell.number) ops.push_back(*cell.number);
    }
    LocalEquilibriumFit fit{solve_multipliers(ConstraintSet::from_state(std::move(ops), rho), opts),
                            {}, {}};
    // Per cell the exponent is -beta(e - u.p - mu n) = -(beta e + (-beta u).p
    // + (-beta mu) n), so lambda_e = beta, lambda_p = -beta u, lambda_n =
    // -beta mu. Below the gauge tolerance |beta| the division is meaningless
    // and the fields stay zeroed with fields_defined = false.
    Index offset = 0;
    for (const auto& cell : cells) {
        CellFields f;
        f.beta = fit.solution.multipliers(offset++);
        f.velocity = RealVector::Zero(static_cast<Index>(cell.momenta.size()));
        const bool defined = std::abs(f.beta) > field_gauge_tol;
        for (std::size_t k = 0; k < cell.momenta.size(); ++k) {
            const double lam = fit.solution.multipliers(offset++);
            if (defined) f.velocity(static_cast<Index>(k)) = -lam / f.beta;
        }
        if (cell.number) {
            const double lam = fit.solution.multipliers(offset++);
            if (defined) f.mu = -lam / f.beta;
        }
        fit.fields.push_back(std::move(f));
        fit.fields_defined.push_back(defined);
    }
    return fit;
}

ThermoRelation thermo_relation_check(const HermitianOperator& h, double beta,
                                     const std::vector<HermitianOperator>& momenta,
                                     const RealVector& velocity,
                                     const std::optional<HermitianOperator>& number, double mu) {
    if (beta == 0.0)
        throw contract_violation("maxent: the free energy is undefined at beta = 0");
    const Matrix x = equilibrium_exponent(h, beta, momenta, velocity, number, mu);
    const SpectralDecomposition sd = spectral_decompose(HermitianOperator::trusted(x));
    const double top = sd.eigenvalues(0);
    RealVector weights = (sd.eigenvalues.array() - top).exp();
    const double partition_log = top + std::log(weights.sum());
    weights /= weights.sum();
    const Matrix m = sd.eigenvectors * weights.asDiagonal() * sd.eigenvectors.adjoint();
    const DensityMatrix rho = trusted_density(0.5 * (m + m.adjoint()));

    const double entropy = von_neumann_entropy(rho);
    double drift = 0.0;  // velocity.<P> + mu <N>
    for (std::size_t k = 0; k < momenta.size(); ++k)
        drift += velocity(static_cast<Index>(k)) * expectation(momenta[k], rho);
    if (number) drift += mu * expectation(*number, rho);
    // Tr e^{-beta(H - U.P - mu N)} = e^{-beta(F - U.<P> - mu <N>)} defines F.
    const double free_energy = -partition_log / beta + drift;
    const double gap = std::abs(entropy - beta * (expectation(h, rho) - free_energy));
    return ThermoRelation{entropy, free_energy, gap};
}

EntropyDecomposition entropy_density_decomposition(const std::vector<CellOperators>& cells,
                                                   const std::vector<CellFields>& fields,
                                                   const DensityMatrix& rho_leq) {
    validate_cells(cells, fields.size());
    const Index d = rho_leq.dim();
    Index dim_product = 1;
    for (const auto& cell : cells) {
        if (cell.local_dim < 1)
            throw contract_violation("maxent: every cell needs a positive local dimension");
        if (cell.local_dim > d / std::max<Index>(dim_product, 1) + 1)
            dim_product = d + 1;  // saturate instead of overflowing
        else
            dim_product *= cell.local_dim;
    }
    if (dim_product != d)
        throw contract_violation(
            "maxent: cell local dimensions must multiply to the full dimension");

    EntropyDecomposition out;
    out.contributions.reserve(cells.size());
    for (std::size_t y = 0; y < cells.size(); ++y) {
        const HermitianOperator x =
            HermitianOperator::trusted(cell_exponent(cells[y], fields[y], d));
        const SpectralDecomposition sd = spectral_decompose(x);
        const double top = sd.eigenvalues(0);
        const double log_trace = top + std::log((sd.eigenvalues.array() - top).exp().sum());
        // sigma_y = -<X_y> + log Tr e^{X_y} + log(d_y / D); the last term
        // cancels the trace the exponential picked up over the other cells.
        out.contributions.push_back(
            -expectation(x, rho_leq) + log_trace +
            std::log(static_cast<double>(cells[y].local_dim) / static_cast<double>(d)));
    }
    out.total_entropy = von_neumann_entropy(rho_leq);
    double sum = 0.0;
    for (double c : out.contributions) sum += c;
    out.residual = sum - out.total_entropy;
    return out;
}

}  // namespace decohist
