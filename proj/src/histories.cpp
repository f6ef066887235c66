#include "decohist/histories.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <utility>

namespace decohist {

namespace {

using Node    = HistorySet::Node;
using NodePtr = std::shared_ptr<const Node>;

// Shape pass over every path: null checks, dimension consistency, one child
// per alternative, uniform depth. Counts leaf paths and aborts as soon as the
// count passes the cap, so shared-subtree DAGs with huge path counts fail fast.
void validate_node(const Node* node, std::size_t depth, std::size_t n_times, Index dim,
                   std::size_t& leaves) {
    if (node == nullptr || node->set == nullptr)
        throw contract_violation("histories: history tree contains a null node");
    if (node->set->dim() != dim)
        throw contract_violation("histories: projector-set dimension changes along the tree");
    if (depth + 1 == n_times) {
        if (!node->children.empty())
            throw contract_violation("histories: tree is deeper than the time list");
        leaves += node->set->size();
        if (leaves > hist_max_leaves)
            throw cap_exceeded("histories: history count exceeds " +
                               std::to_string(hist_max_leaves));
        return;
    }
    if (node->children.size() != node->set->size())
        throw contract_violation("histories: node needs one child subtree per alternative");
    for (const auto& child : node->children)
        validate_node(child.get(), depth + 1, n_times, dim, leaves);
}

void collect_labels(const Node* node, HistoryLabel& cur, std::vector<HistoryLabel>& out) {
    const bool last = node->children.empty();
    for (std::size_t a = 0; a < node->set->size(); ++a) {
        cur.push_back(static_cast<Index>(a));
        if (last)
            out.push_back(cur);
        else
            collect_labels(node->children[a].get(), cur, out);
        cur.pop_back();
    }
}

void visit_classes(const Node* node, HistoryLabel& label, const Matrix* prefix,
                   const std::function<void(const HistoryLabel&, const Matrix&)>& visit) {
    const bool last = node->children.empty();
    for (std::size_t a = 0; a < node->set->size(); ++a) {
        label.push_back(static_cast<Index>(a));
        Matrix next = prefix == nullptr ? (*node->set)[a].matrix()
                                        : Matrix((*node->set)[a].matrix() * (*prefix));
        if (last)
            visit(label, next);
        else
            visit_classes(node->children[a].get(), label, &next, visit);
        label.pop_back();
    }
}

void visit_branches(const Node* node, HistoryLabel& label, const Matrix& prefix,
                    double prune_tol,
                    const std::function<void(const HistoryLabel&, const Matrix&)>& visit) {
    const bool last = node->children.empty();
    for (std::size_t a = 0; a < node->set->size(); ++a) {
        Matrix next = (*node->set)[a].matrix() * prefix;
        if (prune_tol >= 0.0 && next.norm() <= prune_tol) continue;
        label.push_back(static_cast<Index>(a));
        if (last)
            visit(label, next);
        else
            visit_branches(node->children[a].get(), label, next, prune_tol, visit);
        label.pop_back();
    }
}

} // namespace

// ---------------------------------------------------------------------------

HistorySet::HistorySet(std::vector<double> times, std::shared_ptr<const Node> root)
    : times_(std::move(times)), root_(std::move(root)) {
    if (times_.empty())
        throw contract_violation("histories: at least one time is required");
    for (double t : times_)
        if (!std::isfinite(t))
            throw contract_violation("histories: times must be finite");
    for (std::size_t k = 0; k + 1 < times_.size(); ++k)
        if (!(times_[k] < times_[k + 1]))
            throw contract_violation("histories: times must be strictly increasing");
    if (root_ == nullptr || root_->set == nullptr)
        throw contract_violation("histories: history tree contains a null node");
    if (root_->set->dim() > hist_max_dim)
        throw cap_exceeded("histories: dimension exceeds the enumeration cap " +
                           std::to_string(hist_max_dim));
    std::size_t leaves = 0;
    validate_node(root_.get(), 0, times_.size(), root_->set->dim(), leaves);
}

HistorySet HistorySet::product(std::vector<double> times,
                               std::vector<std::shared_ptr<const ProjectorSet>> sets) {
    if (sets.empty() || sets.size() != times.size())
        throw contract_violation("histories: one alternative set per time is required");
    std::shared_ptr<const Node> below;
    for (std::size_t k = sets.size(); k-- > 0;) {
        if (sets[k] == nullptr)
            throw contract_violation("histories: null projector set");
        auto node = std::make_shared<Node>();
        node->set = sets[k];
        if (below) node->children.assign(sets[k]->size(), below);
        below = std::move(node);
    }
    return HistorySet(std::move(times), std::move(below));
}

std::size_t HistorySet::num_classes() const {
    std::size_t count = 0;
    std::vector<const Node*> stack{root_.get()};
    while (!stack.empty()) {
        const Node* node = stack.back();
        stack.pop_back();
        if (node->children.empty()) {
            count += node->set->size();
        } else {
            for (const auto& child : node->children) stack.push_back(child.get());
        }
    }
    return count;
}

std::vector<HistoryLabel> HistorySet::labels() const {
    std::vector<HistoryLabel> out;
    out.reserve(num_classes());
    HistoryLabel cur;
    collect_labels(root_.get(), cur, out);
    return out;
}

bool HistorySet::fine_grained() const {
    std::set<const Node*> seen;
    std::vector<const Node*> stack{root_.get()};
    while (!stack.empty()) {
        const Node* node = stack.back();
        stack.pop_back();
        if (!seen.insert(node).second) continue;
        for (const auto& p : node->set->members())
            if (p.rank() != 1) return false;
        for (const auto& child : node->children) stack.push_back(child.get());
    }
    return true;
}

Matrix HistorySet::class_operator(const HistoryLabel& path) const {
    if (path.size() != times_.size())
        throw contract_violation("histories: path length differs from the time list");
    const Node* node = root_.get();
    Matrix prod;
    for (std::size_t k = 0; k < path.size(); ++k) {
        const Index a = path[k];
        if (a < 0 || static_cast<std::size_t>(a) >= node->set->size())
            throw contract_violation("histories: unknown path label");
        const Matrix& p = (*node->set)[static_cast<std::size_t>(a)].matrix();
        prod = (k == 0) ? p : Matrix(p * prod);
        if (k + 1 < path.size()) node = node->children[static_cast<std::size_t>(a)].get();
    }
    return prod;
}

Vector HistorySet::branch_state(const HistoryLabel& path, const StateVector& psi) const {
    if (psi.dim() != dim())
        throw contract_violation("histories: state dimension differs from the history set");
    if (path.size() != times_.size())
        throw contract_violation("histories: path length differs from the time list");
    const Node* node = root_.get();
    Vector v = psi.amplitudes();
    for (std::size_t k = 0; k < path.size(); ++k) {
        const Index a = path[k];
        if (a < 0 || static_cast<std::size_t>(a) >= node->set->size())
            throw contract_violation("histories: unknown path label");
        v = (*node->set)[static_cast<std::size_t>(a)].matrix() * v;
        if (k + 1 < path.size()) node = node->children[static_cast<std::size_t>(a)].get();
    }
    return v;
}

void HistorySet::for_each_class(
    const std::function<void(const HistoryLabel&, const Matrix&)>& visit) const {
    HistoryLabel label;
    visit_classes(root_.get(), label, nullptr, visit);
}

void HistorySet::for_each_branch(
    const Matrix& seed, double prune_tol,
    const std::function<void(const HistoryLabel&, const Matrix&)>& visit) const {
    if (seed.rows() != dim())
        throw contract_violation("histories: seed rows differ from the history set dimension");
    HistoryLabel label;
    visit_branches(root_.get(), label, seed, prune_tol, visit);
}

// ---------------------------------------------------------------------------

void check_partition(const HistorySet& set, const CoarseGrainingMap& map) {
    std::set<HistoryLabel> all;
    for (auto& l : set.labels()) all.insert(std::move(l));
    if (map.classes.empty())
        throw contract_violation("histories: coarse-graining map has no classes");
    std::set<HistoryLabel> seen;
    for (const auto& cls : map.classes) {
        if (cls.empty())
            throw contract_violation("histories: empty class in coarse-graining map");
        for (const auto& l : cls) {
            if (all.find(l) == all.end())
                throw contract_violation("histories: class label is not a history of this set");
            if (!seen.insert(l).second)
                throw contract_violation("histories: history assigned to two classes");
        }
    }
    if (seen.size() != all.size())
        throw contract_violation("histories: partition misses some histories");
}

namespace {

struct ClassSuffixes {
    std::size_t id;                      // position in map.classes
    std::vector<HistoryLabel> suffixes;  // remaining label components
};

struct RealizeResult {
    NodePtr node;
    std::map<std::size_t, HistoryLabel> labels;  // class id -> coarse label suffix
};

bool sets_close(const ProjectorSet& a, const ProjectorSet& b, double tol) {
    if (a.size() != b.size() || a.dim() != b.dim()) return false;
    for (std::size_t k = 0; k < a.size(); ++k)
        if (max_abs(a[k].matrix() - b[k].matrix()) > tol) return false;
    return true;
}

bool subtrees_match(const Node* a, const Node* b, double tol) {
    if (a == b) return true;
    if (a == nullptr || b == nullptr) return false;
    if (a->set != b->set && !sets_close(*a->set, *b->set, tol)) return false;
    if (a->children.size() != b->children.size()) return false;
    for (std::size_t k = 0; k < a->children.size(); ++k)
        if (!subtrees_match(a->children[k].get(), b->children[k].get(), tol)) return false;
    return true;
}

// Recursive chain realization. Each class must factor at this node into a
// group of first alternatives times a continuation shared by every member of
// the group; classes whose groups partially overlap, or whose merged
// alternatives lead into differing subtrees, cannot be realized as a chain.
RealizeResult realize(const Node* node, std::vector<ClassSuffixes> classes, double match_tol) {
    struct Group {
        std::vector<Index> firsts;           // sorted alternative indices
        std::vector<ClassSuffixes> members;  // classes continuing past this group
    };
    std::vector<Group> groups;

    for (auto& cls : classes) {
        std::map<Index, std::vector<HistoryLabel>> by_first;
        for (const auto& s : cls.suffixes)
            by_first[s.front()].emplace_back().assign(s.begin() + 1, s.end());
        std::vector<Index> firsts;
        firsts.reserve(by_first.size());
        for (const auto& entry : by_first) firsts.push_back(entry.first);

        // product form: identical continuation after every merged alternative
        std::vector<HistoryLabel> tail;
        for (auto& entry : by_first) {
            std::sort(entry.second.begin(), entry.second.end());
            if (tail.empty())
                tail = entry.second;
            else if (entry.second != tail)
                throw unsupported_graining(
                    "histories: class is not a product of per-time alternative groups");
        }

        bool placed = false;
        for (auto& g : groups) {
            if (g.firsts == firsts) {
                g.members.push_back({cls.id, std::move(tail)});
                placed = true;
                break;
            }
            std::vector<Index> overlap;
            std::set_intersection(g.firsts.begin(), g.firsts.end(), firsts.begin(),
                                  firsts.end(), std::back_inserter(overlap));
            if (!overlap.empty())
                throw unsupported_graining(
                    "histories: classes overlap on a per-time alternative group");
        }
        if (!placed) groups.push_back({std::move(firsts), {{cls.id, std::move(tail)}}});
    }

    std::sort(groups.begin(), groups.end(),
              [](const Group& a, const Group& b) { return a.firsts.front() < b.firsts.front(); });
    std::size_t covered = 0;
    for (const auto& g : groups) covered += g.firsts.size();
    if (covered != node->set->size())
        throw contract_violation("histories: partition does not cover every alternative");

    const Index d = node->set->dim();
    const bool last = node->children.empty();
    std::vector<Projector> members;
    std::vector<NodePtr> children;
    std::map<std::size_t, HistoryLabel> labels;
    members.reserve(groups.size());

    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        Group& g = groups[gi];
        Matrix sum = Matrix::Zero(d, d);
        for (Index a : g.firsts) sum += (*node->set)[static_cast<std::size_t>(a)].matrix();
        members.emplace_back(sum);

        if (last) {
            if (g.members.size() != 1)
                throw contract_violation("histories: duplicate class at a final alternative");
            labels[g.members.front().id] = {static_cast<Index>(gi)};
            continue;
        }
        const Node* sub = node->children[static_cast<std::size_t>(g.firsts.front())].get();
        for (Index a : g.firsts)
            if (!subtrees_match(sub, node->children[static_cast<std::size_t>(a)].get(),
                                match_tol))
                throw unsupported_graining(
                    "histories: merged alternatives lead into different subtrees");
        RealizeResult r = realize(sub, std::move(g.members), match_tol);
        children.push_back(std::move(r.node));
        for (auto& entry : r.labels) {
            HistoryLabel full;
            full.reserve(entry.second.size() + 1);
            full.push_back(static_cast<Index>(gi));
            full.insert(full.end(), entry.second.begin(), entry.second.end());
            labels[entry.first] = std::move(full);
        }
    }

    auto out = std::make_shared<Node>();
    out->set = std::make_shared<ProjectorSet>(std::move(members));
    out->children = std::move(children);
    return {std::move(out), std::move(labels)};
}

} // namespace

CoarseGrainedSet coarse_grain(const HistorySet& set, const CoarseGrainingMap& map,
                              double match_tol) {
    check_partition(set, map);
    std::vector<ClassSuffixes> classes;
    classes.reserve(map.classes.size());
    for (std::size_t k = 0; k < map.classes.size(); ++k)
        classes.push_back({k, map.classes[k]});
    RealizeResult r = realize(set.root().get(), std::move(classes), match_tol);

    std::vector<HistoryLabel> class_to_label(map.classes.size());
    for (auto& entry : r.labels) class_to_label[entry.first] = std::move(entry.second);
    return {HistorySet(set.times(), std::move(r.node)), std::move(class_to_label)};
}

std::vector<Matrix> coarse_grained_class_operators(const HistorySet& set,
                                                   const CoarseGrainingMap& map) {
    check_partition(set, map);
    std::map<HistoryLabel, std::size_t> class_of;
    for (std::size_t k = 0; k < map.classes.size(); ++k)
        for (const auto& l : map.classes[k]) class_of[l] = k;

    const Index d = set.dim();
    std::vector<Matrix> sums(map.classes.size(), Matrix::Zero(d, d));
    set.for_each_class(
        [&](const HistoryLabel& l, const Matrix& c) { sums[class_of.at(l)] += c; });
    return sums;
}

std::vector<ClassOperator> all_class_operators(const HistorySet& set) {
    std::vector<ClassOperator> out;
    out.reserve(set.num_classes());
    set.for_each_class(
        [&](const HistoryLabel& l, const Matrix& c) { out.push_back({l, c}); });
    return out;
}

// ---------------------------------------------------------------------------

HistorySet fine_grained_set(const std::vector<Matrix>& bases, std::vector<double> times) {
    if (bases.empty() || bases.size() != times.size())
        throw contract_violation("histories: one basis per time is required");
    const Index d = bases.front().rows();
    std::vector<std::shared_ptr<const ProjectorSet>> sets;
    sets.reserve(bases.size());
    for (std::size_t k = 0; k < bases.size(); ++k) {
        const Matrix& b = bases[k];
        if (b.rows() != d || b.cols() != d)
            throw contract_violation("histories: basis " + std::to_string(k) +
                                     " is not square of the shared dimension");
        if (max_abs(Matrix(b.adjoint() * b - Matrix::Identity(d, d))) > tol_proj)
            throw contract_violation("histories: basis " + std::to_string(k) +
                                     " is not orthonormal");
        sets.push_back(std::make_shared<ProjectorSet>(ProjectorSet::from_basis(b)));
    }
    return HistorySet::product(std::move(times), std::move(sets));
}

HistorySet narrative_set(const ProjectorSet& schrodinger_set, const HermitianOperator& h,
                         std::vector<double> times, double hbar) {
    if (h.dim() != schrodinger_set.dim())
        throw contract_violation("histories: Hamiltonian dimension differs from the set");
    std::vector<std::shared_ptr<const ProjectorSet>> sets;
    sets.reserve(times.size());
    for (double t : times) {
        const Matrix u = evolution_operator(h, t, hbar);
        std::vector<Projector> members;
        members.reserve(schrodinger_set.size());
        for (const auto& p : schrodinger_set.members())
            members.emplace_back(Matrix(u * p.matrix() * u.adjoint()));
        sets.push_back(std::make_shared<ProjectorSet>(std::move(members)));
    }
    return HistorySet::product(std::move(times), std::move(sets));
}

} // namespace decohist
