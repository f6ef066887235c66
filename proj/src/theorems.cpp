#include "decohist/theorems.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <unordered_set>
#include <utility>

#include "decohist/errors.hpp"
#include "decohist/parallel.hpp"
#include "decohist/random.hpp"

namespace decohist {

namespace {

// A random draw counts as degenerate when any relevant overlap magnitude
// falls below this floor; degenerate draws are replaced, never perturbed.
constexpr double genericity_floor = 1e-6;
constexpr int max_redraws = 64;

// A shared prior chain counts as asking "is the system in this state?" only
// when each of its projectors keeps essentially all of the state's norm.
constexpr double state_question_overlap = 1.0 - 1e-8;

bool same_alternatives(const ProjectorSet& a, const ProjectorSet& b) {
    if (a.size() != b.size() || a.dim() != b.dim()) return false;
    for (std::size_t k = 0; k < a.size(); ++k)
        if ((a[k].matrix() - b[k].matrix()).cwiseAbs().maxCoeff() > 1e-12) return false;
    return true;
}

// The alternative set at each depth, earliest first. The structure checks
// rely on every branch seeing the same alternatives at a given time, so
// branch-dependent sets are rejected.
std::vector<std::shared_ptr<const ProjectorSet>> level_sets(const HistorySet& set) {
    std::vector<std::shared_ptr<const ProjectorSet>> levels;
    levels.reserve(set.num_times());
    std::vector<const HistorySet::Node*> frontier{set.root().get()};
    for (std::size_t depth = 0; depth < set.num_times(); ++depth) {
        const std::shared_ptr<const ProjectorSet>& lead = frontier.front()->set;
        std::vector<const HistorySet::Node*> next;
        std::unordered_set<const HistorySet::Node*> seen;
        for (const HistorySet::Node* node : frontier) {
            if (node->set != lead && !same_alternatives(*node->set, *lead))
                throw unsupported_graining(
                    "theorems: this check needs the same alternatives on every branch "
                    "of a time");
            for (const auto& child : node->children)
                if (child && seen.insert(child.get()).second) next.push_back(child.get());
        }
        levels.push_back(lead);
        frontier = std::move(next);
    }
    return levels;
}

} // namespace

std::string kind_name(TrivialityVerdict::Kind kind) {
    switch (kind) {
        case TrivialityVerdict::Kind::non_decoherent: return "non-decoherent";
        case TrivialityVerdict::Kind::trivial_unique_prior: return "trivial-unique-prior";
        case TrivialityVerdict::Kind::trivial_state_question: return "trivial-state-question";
        case TrivialityVerdict::Kind::zero_padded_trivial: return "zero-padded-trivial";
    }
    throw contract_violation("theorems: unknown verdict kind");
}

TrivialityVerdict classify_fine_grained(const HistorySet& set, const StateVector& psi,
                                        double exact_tol) {
    if (!(exact_tol > 0.0) || !std::isfinite(exact_tol))
        throw contract_violation("theorems: exact_tol must be positive and finite");
    if (psi.dim() != set.dim())
        throw contract_violation("theorems: state dimension differs from the history set");
    if (!set.fine_grained())
        throw contract_violation(
            "theorems: classification applies only to completely fine-grained sets");
    const auto levels = level_sets(set);

    // Every branch is proportional to its rank-1 final basis vector, so
    // branches overlap only when they share the final alternative, and there
    // |<a'|a>| is just the product of the two branch norms. The worst pair in
    // a final group is therefore its two largest amplitudes.
    struct TopTwo {
        double first = 0.0;
        double second = 0.0;
        HistoryLabel first_label;
        HistoryLabel second_label;
    };
    std::vector<TopTwo> finals(levels.back()->size());
    set.for_each_branch(psi.amplitudes(), 0.0,
                        [&](const HistoryLabel& label, const Matrix& branch) {
                            const double amp = branch.norm();
                            TopTwo& slot = finals[static_cast<std::size_t>(label.back())];
                            if (amp > slot.first) {
                                slot.second = slot.first;
                                slot.second_label = std::move(slot.first_label);
                                slot.first = amp;
                                slot.first_label = label;
                            } else if (amp > slot.second) {
                                slot.second = amp;
                                slot.second_label = label;
                            }
                        });

    TrivialityVerdict verdict;
    for (const TopTwo& slot : finals) {
        const double overlap = slot.first * slot.second;
        if (overlap > verdict.max_overlap) {
            verdict.max_overlap = overlap;
            verdict.witness_left = slot.second_label;
            verdict.witness_right = slot.first_label;
        }
    }
    if (verdict.max_overlap > exact_tol) {
        verdict.classification = TrivialityVerdict::Kind::non_decoherent;
        return verdict;
    }

    // Exactly decoherent. A final group's amplitude can clear the populated
    // floor sqrt(exact_tol) at most once here: two such amplitudes would
    // already have tripped the overlap test above.
    verdict.final_to_prior.assign(finals.size(), HistoryLabel{});
    std::size_t populated = 0;
    bool missing = false;
    for (std::size_t f = 0; f < finals.size(); ++f) {
        if (finals[f].first * finals[f].first > exact_tol) {
            verdict.final_to_prior[f] = finals[f].first_label;
            ++populated;
        } else {
            missing = true;
        }
    }

    const std::size_t n = set.num_times();
    bool shared_chain = n >= 2 && populated >= 2;
    const HistoryLabel* chain = nullptr;
    for (const HistoryLabel& label : verdict.final_to_prior) {
        if (label.empty()) continue;
        if (chain == nullptr) {
            chain = &label;
            continue;
        }
        for (std::size_t k = 0; shared_chain && k + 1 < n; ++k)
            if (label[k] != (*chain)[k]) shared_chain = false;
        if (!shared_chain) break;
    }
    if (shared_chain) {
        for (std::size_t k = 0; shared_chain && k + 1 < n; ++k) {
            const Matrix& q = (*levels[k])[static_cast<std::size_t>((*chain)[k])].matrix();
            if ((q * psi.amplitudes()).norm() < state_question_overlap) shared_chain = false;
        }
    }
    if (shared_chain)
        verdict.classification = TrivialityVerdict::Kind::trivial_state_question;
    else if (missing)
        verdict.classification = TrivialityVerdict::Kind::zero_padded_trivial;
    else
        verdict.classification = TrivialityVerdict::Kind::trivial_unique_prior;
    return verdict;
}

FineGrainedSearch search_fine_grained(Index dim, int n_times, int trials,
                                      std::uint64_t seed, int injected_trivial,
                                      int threads) {
    if (dim < 2) throw contract_violation("theorems: the search needs dim >= 2");
    if (n_times < 1) throw contract_violation("theorems: the search needs at least one time");
    if (trials < 1) throw contract_violation("theorems: the search needs at least one trial");
    if (injected_trivial < 0 || injected_trivial > trials)
        throw contract_violation(
            "theorems: injected trials must lie within the trial count");
    if (threads < 1) throw contract_violation("theorems: threads must be at least 1");
    std::uint64_t leaves = 1;
    for (int k = 0; k < n_times; ++k) {
        leaves *= static_cast<std::uint64_t>(dim);
        if (leaves > static_cast<std::uint64_t>(hist_max_leaves))
            throw cap_exceeded("theorems: dim^n_times exceeds the enumeration budget");
    }

    std::vector<double> times(static_cast<std::size_t>(n_times));
    for (int k = 0; k < n_times; ++k) times[static_cast<std::size_t>(k)] = double(k);

    std::vector<TrivialityVerdict> verdicts(static_cast<std::size_t>(trials));
    parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t t) {
        rng::Engine eng = rng::engine_for(seed, t);
        const bool injected = t < static_cast<std::size_t>(injected_trivial);

        std::vector<Matrix> bases(static_cast<std::size_t>(n_times));
        bases.front() = rng::haar_unitary(dim, eng);
        for (std::size_t k = 1; k < bases.size(); ++k) {
            if (injected) {
                bases[k] = bases.front();
                continue;
            }
            for (int attempt = 0;; ++attempt) {
                bases[k] = rng::haar_unitary(dim, eng);
                const double closest =
                    (bases[k].adjoint() * bases[k - 1]).cwiseAbs().minCoeff();
                if (closest >= genericity_floor) break;
                if (attempt + 1 >= max_redraws)
                    throw numerical_failure(
                        "theorems: could not draw a generic basis pair");
            }
        }

        Vector psi;
        for (int attempt = 0;; ++attempt) {
            psi = rng::haar_vector(dim, eng);
            if ((bases.front().adjoint() * psi).cwiseAbs().minCoeff() >= genericity_floor)
                break;
            if (attempt + 1 >= max_redraws)
                throw numerical_failure("theorems: could not draw a generic state");
        }

        verdicts[t] = classify_fine_grained(fine_grained_set(bases, times),
                                            StateVector{std::move(psi)});
    });

    FineGrainedSearch out;
    out.seed = seed;
    out.dim = dim;
    out.n_times = n_times;
    out.trials = trials;
    out.classifications.reserve(verdicts.size());
    for (const TrivialityVerdict& verdict : verdicts) {
        out.classifications.push_back(verdict.classification);
        if (verdict.classification == TrivialityVerdict::Kind::non_decoherent) {
            ++out.non_decoherent;
            out.min_defect = std::min(out.min_defect, verdict.max_overlap);
        } else {
            ++out.trivial;
        }
        if (out.witnesses.size() < static_cast<std::size_t>(max_search_witnesses))
            out.witnesses.push_back(verdict);
    }
    return out;
}

CertaintyReport certainty_check(const HistorySet& set, const StateVector& psi, double tol) {
    if (!(tol > 0.0) || !std::isfinite(tol))
        throw contract_violation("theorems: tol must be positive and finite");
    if (psi.dim() != set.dim())
        throw contract_violation("theorems: state dimension differs from the history set");
    const auto levels = level_sets(set);

    CertaintyReport out;
    const DecoherenceReport functional =
        decoherence_functional(set, DensityMatrix::pure(psi), tol);
    out.defect = functional.defect;
    out.decoherent = functional.decoherent;
    if (!out.decoherent) {
        out.notice = "the set is not exactly decoherent at the requested tolerance";
        return out;
    }

    Eigen::Index best = 0;
    out.max_probability = functional.probabilities.maxCoeff(&best);
    if (out.max_probability < 1.0 - tol) {
        out.notice = "no history reaches probability one at the requested tolerance";
        return out;
    }
    out.certain = true;
    out.vacuous = false;
    out.certain_label = functional.labels[static_cast<std::size_t>(best)];

    const Vector& state = psi.amplitudes();
    for (std::size_t k = 0; k < levels.size(); ++k) {
        const ProjectorSet& alternatives = *levels[k];
        for (std::size_t a = 0; a < alternatives.size(); ++a) {
            Vector projected = alternatives[a].matrix() * state;
            if (static_cast<Index>(a) == out.certain_label[k]) projected -= state;
            out.max_violation = std::max(out.max_violation, projected.norm());
        }
    }
    out.verified = out.max_violation <= std::sqrt(tol);
    return out;
}

NarrativeReport trivial_narrative_check(const HistorySet& set, double drift_tol) {
    if (!(drift_tol > 0.0) || !std::isfinite(drift_tol))
        throw contract_violation("theorems: drift_tol must be positive and finite");
    const auto levels = level_sets(set);
    const ProjectorSet& base = *levels.front();

    NarrativeReport out;
    for (std::size_t k = 1; k < levels.size(); ++k) {
        if (levels[k]->size() != base.size())
            throw contract_violation(
                "theorems: the narrative changes its alternative count across times");
        for (std::size_t a = 0; a < base.size(); ++a)
            out.drift = std::max(out.drift, ((*levels[k])[a].matrix() - base[a].matrix())
                                                .cwiseAbs()
                                                .maxCoeff());
    }
    if (out.drift > drift_tol)
        throw contract_violation(
            "theorems: the followed alternatives drift across times; this check "
            "applies only to static ones");

    set.for_each_class([&](const HistoryLabel& label, const Matrix& chain) {
        const bool constant = std::all_of(label.begin(), label.end(),
                                          [&](Index a) { return a == label.front(); });
        if (constant) {
            const double gap =
                (chain - base[static_cast<std::size_t>(label.front())].matrix())
                    .cwiseAbs()
                    .maxCoeff();
            out.projection_gap = std::max(out.projection_gap, gap);
        } else {
            out.leakage = std::max(out.leakage, chain.cwiseAbs().maxCoeff());
        }
    });
    out.confirmed = out.leakage <= narrative_identity_tol &&
                    out.projection_gap <= narrative_identity_tol;
    return out;
}

double generalized_records_check(const HistorySet& set, const StateVector& psi,
                                 const ProjectorSet& records, double prune_tol) {
    if (psi.dim() != set.dim())
        throw contract_violation("theorems: state dimension differs from the history set");
    if (records.dim() != set.dim())
        throw contract_violation("theorems: record dimension differs from the history set");

    std::vector<Vector> branches;
    set.for_each_branch(psi.amplitudes(), prune_tol,
                        [&](const HistoryLabel&, const Matrix& b) {
                            branches.push_back(b.col(0));
                        });
    if (records.size() != branches.size())
        throw contract_violation(
            "theorems: one record per retained history is required, aligned with "
            "the depth-first enumeration");

    double worst = 0.0;
    for (std::size_t a = 0; a < records.size(); ++a) {
        const Matrix& record = records[a].matrix();
        for (std::size_t b = 0; b < branches.size(); ++b) {
            Vector image = record * branches[b];
            if (a == b) image -= branches[b];
            worst = std::max(worst, image.norm());
        }
    }
    return worst;
}

} // namespace decohist
