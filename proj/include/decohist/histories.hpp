#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "decohist/hilbert.hpp"

namespace decohist {

// One history: the alternative index chosen at each successive time.
using HistoryLabel = std::vector<Index>;

// Enumeration caps, stricter than the single-operator cap: history counts grow
// as a product over times, so both the space dimension and the leaf count are
// bounded up front. The dim cap matches the model-factory cap so any model a
// factory can build can also be enumerated.
inline constexpr Index       hist_max_dim    = Index{1} << 12;
inline constexpr std::size_t hist_max_leaves = std::size_t{1} << 16;

// Branches with state norm at or below this are dropped by the enumeration
// default; their probability is exactly 0 and they affect nothing retained.
inline constexpr double default_prune_tol = 1e-12;

struct ClassOperator {
    HistoryLabel label;
    Matrix matrix;  // chain product, rightmost factor is the earliest time
};

// ---------------------------------------------------------------------------

// An ordered sequence of alternative sets, one per time, where the set offered
// at time k+1 may depend on the alternative realized at time k. Represented as
// a tree: each node carries the projector set in force at its time (already
// expressed in the evolving picture) and one child subtree per alternative.
// Branch-independent sets share subtree nodes, so the tree is stored as a DAG.
class HistorySet {
public:
    struct Node {
        std::shared_ptr<const ProjectorSet> set;
        // One entry per alternative of `set`; empty at the final time.
        std::vector<std::shared_ptr<const Node>> children;
    };

    // Validates: times strictly increasing, one tree level per time, matching
    // dims, child counts matching alternative counts. Caps: dim (hist_max_dim)
    // and leaf count (hist_max_leaves) are enforced with cap_exceeded.
    HistorySet(std::vector<double> times, std::shared_ptr<const Node> root);

    // Branch-independent set: the same alternatives at each time on every
    // branch. One set per time, earliest first.
    static HistorySet product(std::vector<double> times,
                              std::vector<std::shared_ptr<const ProjectorSet>> sets);

    Index dim() const { return root_->set->dim(); }
    std::size_t num_times() const { return times_.size(); }
    const std::vector<double>& times() const { return times_; }
    const std::shared_ptr<const Node>& root() const { return root_; }

    std::size_t num_classes() const;          // leaf count
    std::vector<HistoryLabel> labels() const; // depth-first, lexicographic
    bool fine_grained() const;                // every projector rank 1

    // Chain product along one leaf path; throws on an unknown path.
    Matrix class_operator(const HistoryLabel& path) const;

    // C_alpha |psi>, unnormalized.
    Vector branch_state(const HistoryLabel& path, const StateVector& psi) const;

    // Depth-first visit of every history with its class operator; prefix
    // products are cached along the path (one projector multiply per edge).
    void for_each_class(
        const std::function<void(const HistoryLabel&, const Matrix&)>& visit) const;

    // Depth-first visit of C_alpha * seed, where seed is |psi> as a column or
    // a factor W of a density matrix (rho = W W†). Prunes whole subtrees once
    // the running prefix norm falls to prune_tol: projectors are contractions,
    // so every descendant branch is at least as small. Retained branches are
    // unaffected by pruning. prune_tol < 0 disables pruning.
    void for_each_branch(
        const Matrix& seed, double prune_tol,
        const std::function<void(const HistoryLabel&, const Matrix&)>& visit) const;

private:
    std::vector<double> times_;
    std::shared_ptr<const Node> root_;
};

// ---------------------------------------------------------------------------

// Partition of a history set's leaf labels into coarser classes; every leaf
// label must appear in exactly one class.
struct CoarseGrainingMap {
    std::vector<std::vector<HistoryLabel>> classes;
};

// Throws contract_violation unless map is an exhaustive, exclusive partition
// of set's leaf labels with no empty class.
void check_partition(const HistorySet& set, const CoarseGrainingMap& map);

struct CoarseGrainedSet {
    HistorySet set;
    // class_to_label[k] is the leaf label of coarse class k in `set`.
    std::vector<HistoryLabel> class_to_label;
};

// Coarse graining realized as a history set again: each class must decompose,
// time by time along the tree, into a group of alternatives whose projectors
// are summed. Classes whose alternative groups at some node partially overlap,
// or that merge alternatives leading into structurally different subtrees,
// are not chain-realizable here and raise unsupported_graining — their summed
// class operators are still available via coarse_grained_class_operators.
// Post: set.class_operator(class_to_label[k]) equals the sum of the fine
// class operators of classes[k] within 1e-10.
CoarseGrainedSet coarse_grain(const HistorySet& set, const CoarseGrainingMap& map,
                              double match_tol = 1e-10);

// The weaker result kind: summed class operators, aligned with map.classes,
// always available regardless of chain realizability.
std::vector<Matrix> coarse_grained_class_operators(const HistorySet& set,
                                                   const CoarseGrainingMap& map);

// Every history with its chain product, in depth-first label order.
std::vector<ClassOperator> all_class_operators(const HistorySet& set);

// ---------------------------------------------------------------------------

// Completely fine-grained set: one orthonormal basis per time (columns of each
// matrix), every projector rank 1, dim^n histories before pruning.
HistorySet fine_grained_set(const std::vector<Matrix>& bases, std::vector<double> times);

// One fixed-picture alternative set followed through time: the set at time t_k
// is the evolute e^{+iHt_k/hbar} P e^{-iHt_k/hbar} of the given set.
// Branch-independent by construction.
HistorySet narrative_set(const ProjectorSet& schrodinger_set, const HermitianOperator& h,
                         std::vector<double> times, double hbar = 1.0);

} // namespace decohist
