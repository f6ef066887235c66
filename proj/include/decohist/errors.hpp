#pragma once

#include <stdexcept>
#include <string>

namespace decohist {

// Broken caller contract: bad dimensions, invariant-violating input, labels
// that don't line up. The message says which module and which contract.
class contract_violation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// The math itself failed: solver didn't converge, exponent overflowed,
// an eigensolver gave up, a quantity that must be real came out complex.
class numerical_failure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Infeasible max-ent targets: at or inside the margin of an extreme
// eigenvalue of a constraint, where multipliers diverge.
class boundary_error : public numerical_failure {
public:
    using numerical_failure::numerical_failure;
};

// Linearly dependent constraint operators (Gram-matrix rank deficiency).
class degenerate_constraint_error : public numerical_failure {
public:
    using numerical_failure::numerical_failure;
};

// A coarse-graining partition that cannot be realized as projector sums
// time-by-time along the branch tree.
class unsupported_graining : public contract_violation {
public:
    using contract_violation::contract_violation;
};

// A documented size cap was exceeded (Hilbert dimension, branch budget, ...).
class cap_exceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace decohist
