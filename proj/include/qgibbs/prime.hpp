#pragma once

#include <qgibbs/errors.hpp>

#include <compare>
#include <string>

namespace qgibbs {

/// The prime p of Q_p as a validated strong type.
///
/// Primes 2 and 3 are rejected by default (the standing assumption is a
/// fixed prime greater than 3); pass allow_small = true to probe them
/// anyway. Composite moduli are never accepted.
class Prime {
public:
    static Prime checked(unsigned long p, bool allow_small = false) {
        if (!is_prime(p)) {
            throw precondition_error("Prime: " + std::to_string(p) + " is not prime");
        }
        if (p <= 3 && !allow_small) {
            throw precondition_error(
                "Prime: p = " + std::to_string(p) +
                " rejected (p > 3 required; pass allow_small to override)");
        }
        return Prime(p);
    }

    unsigned long value() const { return p_; }

    friend bool operator==(const Prime&, const Prime&) = default;

private:
    explicit Prime(unsigned long p) : p_(p) {}

    static bool is_prime(unsigned long n) {
        if (n < 2) return false;
        for (unsigned long d = 2; d * d <= n; ++d) {
            if (n % d == 0) return false;
        }
        return true;
    }

    unsigned long p_;
};

} // namespace qgibbs
