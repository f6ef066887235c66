#pragma once

#include "decohist/histories.hpp"

namespace decohist {

// Default tolerance for a "decoherent" verdict. No physical mechanism fixes
// this number; it is an engineering knob, configurable per experiment.
inline constexpr double default_decoherence_epsilon = 1e-8;

// Floor under the sqrt(p_a p_b) normalization of the defect, guarding the
// division only; branches with exactly zero probability are excluded outright.
inline constexpr double defect_floor = 1e-300;

// Interference audit over the retained histories of one set and state.
//   gram(a, b)       = Tr(C_a rho C_b†), Hermitian positive semidefinite
//   probabilities(a) = gram(a, a), summing to 1
//   defect           = max_{a != b} |gram(a,b)| / max(sqrt(p_a p_b), floor)
//                      over pairs with both probabilities non-zero
//   decoherent       = defect <= epsilon
struct DecoherenceReport {
    std::vector<HistoryLabel> labels;  // retained histories, depth-first order
    Matrix gram;
    RealVector probabilities;
    double defect    = 0.0;
    double epsilon   = default_decoherence_epsilon;
    bool decoherent  = false;
};

// Builds the report by enumerating branches C_a * W where rho = W W†; for a
// pure state the gram entries are exactly the branch-state overlaps. Branches
// with norm at or below prune_tol are dropped (probability exactly 0); if the
// retained probabilities fail to sum to 1 within 1e-9 the pruning was too
// aggressive and a numerical_failure is raised.
DecoherenceReport decoherence_functional(const HistorySet& set, const DensityMatrix& rho,
                                         double epsilon = default_decoherence_epsilon,
                                         double prune_tol = default_prune_tol);

// Same report from explicit class operators (e.g. the summed operators of a
// non-chain coarse graining); entry k is labeled {k}. No pruning.
DecoherenceReport decoherence_functional(const std::vector<Matrix>& class_ops,
                                         const DensityMatrix& rho,
                                         double epsilon = default_decoherence_epsilon);

// Same report from already-computed branch states C_a W (one per retained
// history, aligned with labels), for callers that can form branches more
// cheaply than the generic enumeration. Gram entries are the pairwise branch
// overlaps; the sum-to-1 audit is identical to the enumerating overloads.
DecoherenceReport report_from_branches(std::vector<HistoryLabel> labels,
                                       const std::vector<Matrix>& branches,
                                       double epsilon = default_decoherence_epsilon);

enum class Verdict { decoherent, not_decoherent };

// Re-judges an existing report at a different tolerance.
Verdict check_medium_decoherence(const DecoherenceReport& report, double epsilon);

// Max over coarse classes of |p(class) - sum of retained fine p in the class|.
// The coarse report's labels are translated to class indices through
// class_to_label (from coarse_grain); when it is empty the coarse labels must
// be the single-entry {k} form produced by the class-operator overload.
double sum_rule_audit(const DecoherenceReport& fine, const CoarseGrainingMap& map,
                      const DecoherenceReport& coarse,
                      const std::vector<HistoryLabel>& class_to_label = {});

// Max over history pairs of |Tr(C_a rho C_b†) - Tr(C_a rho_tilde C_b†)|:
// how well rho_tilde stands in for rho on this set. Enumerated jointly, so a
// branch is pruned only when it is negligible for both states.
double effective_density_check(const HistorySet& set, const DensityMatrix& rho,
                               const DensityMatrix& rho_tilde,
                               double prune_tol = default_prune_tol);

} // namespace decohist
