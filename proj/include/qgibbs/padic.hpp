#pragma once

#include <qgibbs/errors.hpp>
#include <qgibbs/padic_digits.hpp>
#include <qgibbs/padic_rational.hpp>
#include <qgibbs/prime.hpp>
#include <qgibbs/valuation.hpp>

#include <concepts>
#include <span>
#include <vector>

namespace qgibbs {

/// A p-adic number type: immutable value semantics, exact field operations,
/// valuation/norm observers. Satisfied by PAdicRational and PAdicDigits.
template <typename T>
concept padic_number = requires(const T& x, const T& y, const typename T::Context& ctx) {
    { T::zero(ctx) } -> std::same_as<T>;
    { T::one(ctx) } -> std::same_as<T>;
    { T::from_integer(ctx, 0L) } -> std::same_as<T>;
    { T::from_mpq(ctx, mpq_class()) } -> std::same_as<T>;
    { x.context() } -> std::convertible_to<typename T::Context>;
    { x.prime() } -> std::convertible_to<unsigned long>;
    { x.valuation() } -> std::same_as<Valuation>;
    { x.is_exact_zero() } -> std::convertible_to<bool>;
    { x.is_zero_like() } -> std::convertible_to<bool>;
    { x + y } -> std::same_as<T>;
    { x - y } -> std::same_as<T>;
    { x* y } -> std::same_as<T>;
    { x.inv() } -> std::same_as<T>;
    { -x } -> std::same_as<T>;
    { x == y } -> std::convertible_to<bool>;
};

/// x^n for integer n; n < 0 inverts first (x must be nonzero then).
/// norm(pow(x, n)) = norm(x)^n.
template <padic_number Num>
Num pow(const Num& x, long n) {
    if (n < 0) return pow(x.inv(), -n);
    Num acc = Num::one(x.context());
    Num base = x;
    unsigned long e = static_cast<unsigned long>(n);
    while (e != 0) {
        if (e & 1) acc = acc * base;
        base = base * base;
        e >>= 1;
    }
    return acc;
}

/// Smallest valuation admitted by the exp_p convergence disk B(0, p^{-1/(p-1)}).
inline long exp_domain_min_valuation(unsigned long p) { return p == 2 ? 2 : 1; }

/// True when x lies in the convergence disk of exp_p.
template <padic_number Num>
bool exp_domain_ok(const Num& x) {
    return x.valuation().norm_at_most(exp_domain_min_valuation(x.prime()));
}

/// p-adic exponential: sum of x^n/n!, evaluated until the terms vanish
/// below p^{-target_valuation}. The result is a unit with
/// |exp_p(x) - 1|_p = |x|_p, correct modulo p^{target_valuation}.
template <padic_number Num>
Num exp_p(const Num& x, long target_valuation = 32) {
    if (!exp_domain_ok(x)) {
        throw precondition_error(
            "exp_p: argument outside the convergence disk (|x|_p < p^{-1/(p-1)} required: "
            "valuation " + x.valuation().to_string() + ")");
    }
    const auto& ctx = x.context();
    Num sum = Num::one(ctx);
    if (x.is_exact_zero()) return sum;

    // v(x^n/n!) >= n (v(x) - 1/(p-1)); sum every term up to the first n
    // past which all terms sit below the target. The bound is not monotone
    // step to step (division by p | n dips), so an a-priori cutoff is used
    // instead of a runtime valuation test.
    const long p1 = static_cast<long>(x.prime()) - 1;
    const long denom = p1 * x.valuation().lower_bound() - 1;
    const long cutoff = (target_valuation * p1 + denom - 1) / denom + 1;

    Num term = Num::one(ctx);
    for (long n = 1; n <= cutoff; ++n) {
        term = term * x / Num::from_integer(ctx, n);
        if (term.is_exact_zero()) break;
        sum = sum + term;
    }
    return sum;
}

/// Oracle for the product-difference bound: for factors in the closed unit
/// ball, |prod a_i - prod b_i|_p <= max_i |a_i - b_i|_p. Returns the truth
/// of the inequality (which must always hold); violated preconditions are
/// reported distinctly.
template <padic_number Num>
bool product_difference_within_bound(std::span<const Num> a, std::span<const Num> b) {
    if (a.size() != b.size()) {
        throw precondition_error("product_difference_within_bound: length mismatch");
    }
    for (const Num& v : a) {
        if (!v.valuation().norm_at_most(0)) {
            throw precondition_error("product_difference_within_bound: |a_i|_p > 1");
        }
    }
    for (const Num& v : b) {
        if (!v.valuation().norm_at_most(0)) {
            throw precondition_error("product_difference_within_bound: |b_i|_p > 1");
        }
    }
    if (a.empty()) return true;

    const auto& ctx = a[0].context();
    Num pa = Num::one(ctx), pb = Num::one(ctx);
    for (const Num& v : a) pa = pa * v;
    for (const Num& v : b) pb = pb * v;
    const Valuation lhs = (pa - pb).valuation();

    Valuation rhs = Valuation::infinite(); // max |a_i - b_i| = p^{-min v}
    for (std::size_t i = 0; i < a.size(); ++i) {
        rhs = min_exact(rhs, (a[i] - b[i]).valuation());
    }
    if (rhs.is_infinite()) return lhs.is_infinite();
    return lhs.norm_at_most(rhs.value());
}

/// Ball or sphere around a center, radius an integer power of p.
template <padic_number Num>
struct Ball {
    enum class Kind { open_ball, sphere };

    Num center;
    long radius_exponent; // radius p^{radius_exponent}
    Kind kind = Kind::open_ball;

    /// Membership: |x - a|_p < p^m (open ball) or = p^m (sphere).
    bool contains(const Num& x) const {
        const Valuation v = (x - center).valuation();
        if (kind == Kind::open_ball) return v.norm_at_most(-radius_exponent + 1);
        return v.norm_exactly(-radius_exponent);
    }
};

/// Cross-backend conversions (explicit; the backends never mix implicitly).
inline PAdicDigits to_digits(const PAdicRational& x, unsigned precision) {
    return PAdicDigits::from_mpq(DigitsContext{x.context().prime, precision}, x.value());
}

/// Exact value of the digit expansion carried by x (a truncation of the
/// original quantity, not an inverse of to_digits).
inline PAdicRational to_exact(const PAdicDigits& x) {
    if (x.is_flagged_zero()) {
        throw precision_error("to_exact: value is only known to vanish at precision");
    }
    return PAdicRational::from_mpq(RationalContext{x.context().prime}, x.to_mpq());
}

} // namespace qgibbs
