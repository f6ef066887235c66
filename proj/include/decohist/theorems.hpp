#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "decohist/decoherence.hpp"
#include "decohist/histories.hpp"

namespace decohist {

// Structural checks on history sets: what exact decoherence of a completely
// fine-grained set forces the set to look like, random surveys quantifying
// how far generic sets sit from exact decoherence, verification that certain
// (probability-one) histories are fixed by the state, static narratives, and
// record-projector correlation.

// Exact decoherence threshold for the structure checks. Roughly the square
// root of double precision: branch overlaps below this are indistinguishable
// from accumulated rounding at the dimensions and depths we enumerate.
inline constexpr double default_exact_tol = 1e-10;

// A history of a fine-grained set counts as populated when its probability
// exceeds the exact tolerance; anything smaller is padding. With this floor
// the taxonomy below is self-consistent: two populated histories ending in
// the same final alternative would already overlap above the tolerance, so an
// exactly decoherent set can never show more than one populated prior per
// final alternative.

// Outcome of classifying one completely fine-grained set against one state.
struct TrivialityVerdict {
    enum class Kind {
        non_decoherent,          // some same-final pair of branches overlaps
        trivial_unique_prior,    // every final alternative has exactly one
                                 // populated history leading to it
        trivial_state_question,  // all populated histories share one prior
                                 // chain whose projectors nearly contain the
                                 // state ("is the system in that state?")
        zero_padded_trivial,     // decoherent only because some final
                                 // alternatives carry no populated history
    };

    Kind classification = Kind::non_decoherent;

    // Largest |<branch a'|branch a>| over distinct history pairs. This is the
    // raw overlap, not the probability-normalized defect of the functional:
    // for rank-1 branches sharing a final alternative the normalized value
    // degenerates to 1 and carries no information.
    double max_overlap = 0.0;

    // The history pair realizing max_overlap (empty labels when the set has
    // fewer than two populated histories into any single final alternative).
    HistoryLabel witness_left;
    HistoryLabel witness_right;

    // For the trivial kinds: entry f is the unique populated history ending
    // in final alternative f, empty when no history survives there. Left
    // empty for non-decoherent verdicts.
    std::vector<HistoryLabel> final_to_prior;
};

// Display name of a verdict kind ("non-decoherent", "trivial-unique-prior",
// "trivial-state-question", "zero-padded-trivial").
std::string kind_name(TrivialityVerdict::Kind kind);

// Classifies one completely fine-grained history set against psi.
//
// Contracts: every projector of `set` must be rank 1 (contract_violation
// otherwise) and the alternatives must be branch-independent — the same
// basis at each time on every branch (unsupported_graining otherwise).
// exact_tol must be positive.
//
// Rank-1 structure makes the full pairwise overlap test cheap: a branch is
// proportional to its final basis vector, so only pairs sharing the final
// alternative can overlap, and within such a group the worst pair is the two
// largest amplitudes. Kinds are decided in the order non_decoherent,
// trivial_state_question, trivial_unique_prior, zero_padded_trivial.
TrivialityVerdict classify_fine_grained(const HistorySet& set, const StateVector& psi,
                                        double exact_tol = default_exact_tol);

// At most this many per-trial verdicts are retained in a search summary.
inline constexpr int max_search_witnesses = 10;

// Aggregate of a random survey over completely fine-grained sets.
struct FineGrainedSearch {
    std::uint64_t seed = 0;
    Index dim = 0;
    int n_times = 0;
    int trials = 0;

    int non_decoherent = 0;  // trials classified Kind::non_decoherent
    int trivial = 0;         // trials classified any trivial kind

    // Smallest max_overlap among the non-decoherent trials: how close the
    // survey came to an exactly decoherent non-trivial set. Infinity when
    // every trial was trivial.
    double min_defect = std::numeric_limits<double>::infinity();

    std::vector<TrivialityVerdict::Kind> classifications;  // one per trial
    std::vector<TrivialityVerdict> witnesses;  // first max_search_witnesses
};

// Draws `trials` random completely fine-grained sets of `dim` alternatives at
// `n_times` times, classifies each against an independent random state, and
// aggregates the verdicts.
//
// Sampling: trial k uses the engine derived from (seed, k), so the survey is
// reproducible and independent of the thread count. Bases are Haar-random.
// Degenerate draws — any |<b'|b>| below 1e-6 between consecutive bases, or a
// state component below 1e-6 in the first basis — are resampled (at most 64
// attempts, then numerical_failure), so genericity comes from fresh draws,
// never from perturbing a degenerate one.
//
// The first `injected_trivial` trials instead repeat a single Haar basis at
// every time: a known-trivial construction planted to exercise the
// classifier. They count toward `trivial`, never `non_decoherent`.
//
// Contracts: dim >= 2, n_times >= 1, trials >= 1,
// 0 <= injected_trivial <= trials, threads >= 1; dim^n_times must stay within
// hist_max_leaves (cap_exceeded otherwise).
FineGrainedSearch search_fine_grained(Index dim, int n_times, int trials,
                                      std::uint64_t seed, int injected_trivial = 0,
                                      int threads = 1);

// Result of checking that a probability-one history pins the state.
struct CertaintyReport {
    bool decoherent = false;  // defect <= tol, prerequisite for the theorem
    bool certain = false;     // some retained history has probability >= 1 - tol
    bool vacuous = true;      // nothing to verify; see notice
    bool verified = false;    // max_violation <= sqrt(tol)
    std::string notice;       // reason when vacuous

    double defect = 0.0;         // decoherence defect of (set, psi)
    double max_probability = 0.0;
    HistoryLabel certain_label;  // the probability-one history when certain

    // max over times k and alternatives a of || P^k_a psi - delta psi ||,
    // delta = 1 exactly on the certain history's alternative. When the set
    // is exactly decoherent and the history certain, every projector of that
    // history must fix psi and every other alternative must annihilate it.
    double max_violation = 0.0;
};

// Verifies the certainty property: in an exactly decoherent set, a history
// with probability one forces each of its projectors to leave the state
// invariant (and the excluded alternatives to kill it).
//
// The decoherence gate runs first at tolerance `tol`; if the set is not
// exactly decoherent, or no retained history reaches probability 1 - tol,
// the report comes back vacuous with a notice and no violation is computed.
// Violations are compared against sqrt(tol): the probability deficit bounds
// the projector defect only quadratically.
//
// Contracts: psi must match the set's dimension, tol > 0; alternatives must
// be branch-independent (unsupported_graining otherwise).
CertaintyReport certainty_check(const HistorySet& set, const StateVector& psi,
                                double tol = 1e-9);

// Identity tolerance for narrative confirmation: off-narrative chains must
// vanish and repeated-alternative chains must reproduce their projector to
// this accuracy.
inline constexpr double narrative_identity_tol = 1e-10;

// Result of checking that a set of alternatives static under the dynamics
// tells no story: histories only restate the initial alternative.
struct NarrativeReport {
    double drift = 0.0;           // max |Q^k_a - Q^0_a| across times
    double leakage = 0.0;         // max |C_alpha| over mixed-alternative chains
    double projection_gap = 0.0;  // max |C_(a,...,a) - Q_a|
    bool confirmed = false;       // leakage and gap within narrative_identity_tol
};

// Checks the no-evolution narrative: when the followed alternatives are the
// same at every time (projector drift within drift_tol — the precondition,
// contract_violation when violated), every chain that mixes alternatives must
// vanish and every constant chain must collapse to its single projector.
// `confirmed` reports whether both hold within narrative_identity_tol; the
// magnitudes are always reported.
//
// Contracts: alternatives must be branch-independent; drift_tol > 0.
NarrativeReport trivial_narrative_check(const HistorySet& set, double drift_tol = 1e-12);

// Max over record alternatives a and retained histories b of
// || R_a C_b psi - delta_ab C_b psi ||: how well the record projectors R_a
// register which history happened. Zero means each record fires exactly on
// its own branch and annihilates every other.
//
// Records are aligned positionally with the retained histories of (set, psi)
// in depth-first enumeration order at prune_tol; the record set must have one
// member per retained history (contract_violation otherwise, as for a
// dimension mismatch).
double generalized_records_check(const HistorySet& set, const StateVector& psi,
                                 const ProjectorSet& records,
                                 double prune_tol = default_prune_tol);

} // namespace decohist
