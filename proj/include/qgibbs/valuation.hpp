#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace qgibbs {

/// p-adic valuation of a value, with |x|_p = p^{-v}.
///
/// Three states:
///  - finite(v):    exact valuation v, nonzero value;
///  - infinite():   exact zero (v = +inf);
///  - at_least(b):  a fixed-precision value that cancelled to zero at its
///                  working precision; all that is known is v >= b.
class Valuation {
public:
    enum class Kind { finite, at_least, infinite };

    static Valuation finite(long v) { return Valuation(Kind::finite, v); }
    static Valuation infinite() { return Valuation(Kind::infinite, 0); }
    static Valuation at_least(long bound) { return Valuation(Kind::at_least, bound); }

    Kind kind() const { return kind_; }
    bool is_finite() const { return kind_ == Kind::finite; }
    bool is_infinite() const { return kind_ == Kind::infinite; }
    bool is_lower_bound() const { return kind_ == Kind::at_least; }

    /// Exact valuation; only meaningful for the finite kind.
    long value() const { return v_; }

    /// A guaranteed lower bound on the true valuation (the value itself for
    /// finite, the precision bound for at_least; callers must branch on
    /// is_infinite() before using the bound of an exact zero).
    long lower_bound() const { return v_; }

    /// True when |x|_p <= p^{-e} is guaranteed.
    bool norm_at_most(long e) const {
        return kind_ == Kind::infinite || v_ >= e;
    }

    /// True when |x|_p = p^{-e} exactly.
    bool norm_exactly(long e) const { return kind_ == Kind::finite && v_ == e; }

    friend bool operator==(const Valuation&, const Valuation&) = default;

    std::string to_string() const {
        switch (kind_) {
            case Kind::finite: return std::to_string(v_);
            case Kind::at_least: return ">=" + std::to_string(v_);
            case Kind::infinite: return "inf";
        }
        return {};
    }

private:
    Valuation(Kind k, long v) : kind_(k), v_(v) {}

    Kind kind_;
    long v_;
};

/// min of two valuations in norm terms: |x+y|_p <= max(|x|,|y|) = p^{-min(v)}.
/// Only defined when both are exact (finite or infinite).
inline Valuation min_exact(const Valuation& a, const Valuation& b) {
    if (a.is_infinite()) return b;
    if (b.is_infinite()) return a;
    return Valuation::finite(a.value() < b.value() ? a.value() : b.value());
}

} // namespace qgibbs
