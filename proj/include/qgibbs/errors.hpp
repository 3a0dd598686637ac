#pragma once

#include <stdexcept>
#include <string>

namespace qgibbs {

/// A stated precondition of an operation does not hold (bad prime, wrong
/// backend pairing, contraction bound violated, exp domain, ...).
struct precondition_error : std::domain_error {
    using std::domain_error::domain_error;
};

/// A fixed-precision value has been exhausted: the requested operation
/// cannot be performed on a quantity that is indistinguishable from zero
/// at the working precision.
struct precision_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An exhaustive enumeration would exceed the configured budget.
struct budget_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent experiment configuration.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace qgibbs
