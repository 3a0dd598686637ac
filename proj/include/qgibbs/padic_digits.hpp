#pragma once

#include <qgibbs/errors.hpp>
#include <qgibbs/prime.hpp>
#include <qgibbs/valuation.hpp>

#include <gmpxx.h>

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace qgibbs {

/// Construction context for the fixed-precision digit backend.
struct DigitsContext {
    Prime prime;
    unsigned precision; // K, number of base-p digits carried by fresh values

    friend bool operator==(const DigitsContext&, const DigitsContext&) = default;
};

/// Element of Q_p in fixed-precision digit form: p^v * (d0 + d1 p + ...),
/// d0 != 0, with an explicit count of known digits.
///
/// A value is "known modulo p^{v + m}" where m is the known digit count.
/// Multiplication keeps the smaller relative precision of its operands;
/// addition works on the common known window, and leading-digit
/// cancellation shortens it. When a sum cancels through the whole window
/// the result is a flagged zero-at-precision: all that is known is that
/// the true valuation is at least the window end. Flagged zeros propagate
/// through + and *, but inverting one raises precision_error instead of
/// silently treating it as zero.
class PAdicDigits {
public:
    using Context = DigitsContext;

    static PAdicDigits zero(const Context& ctx) { return PAdicDigits(ctx, State::zero, 0, 0, 0); }
    static PAdicDigits one(const Context& ctx) {
        return PAdicDigits(ctx, State::nonzero, 0, 1, static_cast<long>(ctx.precision));
    }

    static PAdicDigits from_integer(const Context& ctx, long n) {
        return from_mpq(ctx, mpq_class(static_cast<signed long>(n)));
    }

    static PAdicDigits from_mpq(const Context& ctx, mpq_class q) {
        q.canonicalize();
        if (q == 0) return zero(ctx);
        mpz_class a = q.get_num(), b = q.get_den();
        mpz_class pz(ctx.prime.value());
        mpz_class tmp;
        const long vn = static_cast<long>(mpz_remove(a.get_mpz_t(), a.get_mpz_t(), pz.get_mpz_t()));
        const long vd = static_cast<long>(mpz_remove(b.get_mpz_t(), b.get_mpz_t(), pz.get_mpz_t()));
        const long val = vn - vd;

        mpz_class pm = pow_p(ctx, ctx.precision);
        mpz_class binv;
        if (mpz_invert(binv.get_mpz_t(), b.get_mpz_t(), pm.get_mpz_t()) == 0) {
            throw precondition_error("PAdicDigits: denominator not invertible mod p^K");
        }
        mpz_class u = (a * binv) % pm;
        if (u < 0) u += pm;
        return PAdicDigits(ctx, State::nonzero, val, std::move(u),
                           static_cast<long>(ctx.precision));
    }

    /// Build from an explicit digit expansion p^v * sum d_i p^i, d0 != 0.
    /// The digit count fixes the known precision of this particular value.
    static PAdicDigits from_parts(const Context& ctx, long val,
                                  const std::vector<std::uint32_t>& digits) {
        if (digits.empty() || digits.front() == 0) {
            throw precondition_error("PAdicDigits: leading digit must be nonzero");
        }
        mpz_class u(0);
        for (std::size_t i = digits.size(); i-- > 0;) {
            if (digits[i] >= ctx.prime.value()) {
                throw precondition_error("PAdicDigits: digit out of range");
            }
            u = u * static_cast<unsigned long>(ctx.prime.value()) + digits[i];
        }
        return PAdicDigits(ctx, State::nonzero, val, std::move(u),
                           static_cast<long>(digits.size()));
    }

    const Context& context() const { return ctx_; }
    unsigned long prime() const { return ctx_.prime.value(); }
    unsigned precision() const { return ctx_.precision; }

    bool is_exact_zero() const { return state_ == State::zero; }
    bool is_flagged_zero() const { return state_ == State::zero_at_precision; }
    bool is_zero_like() const { return state_ != State::nonzero; }

    Valuation valuation() const {
        switch (state_) {
            case State::nonzero: return Valuation::finite(val_);
            case State::zero: return Valuation::infinite();
            case State::zero_at_precision: return Valuation::at_least(val_);
        }
        return Valuation::infinite();
    }

    /// Known digit count m; the value is correct modulo p^{v+m}.
    long known_digits() const { return state_ == State::nonzero ? known_ : 0; }

    /// Guard digits lost to cancellation, relative to the context precision.
    long lost_digits() const {
        return state_ == State::nonzero
                   ? static_cast<long>(ctx_.precision) - known_
                   : static_cast<long>(ctx_.precision);
    }

    /// Base-p digits d0..d_{m-1} of the unit part (d0 != 0).
    std::vector<std::uint32_t> digits() const {
        std::vector<std::uint32_t> out;
        if (state_ != State::nonzero) return out;
        mpz_class u = unit_;
        for (long i = 0; i < known_; ++i) {
            out.push_back(static_cast<std::uint32_t>(mpz_class(u % prime()).get_ui()));
            u /= prime();
        }
        return out;
    }

    /// Exact rational value of the stored (truncated) expansion.
    mpq_class to_mpq() const {
        if (state_ != State::nonzero) return mpq_class(0);
        mpz_class scale = pow_p(ctx_, static_cast<unsigned long>(val_ < 0 ? -val_ : val_));
        mpq_class out = val_ >= 0 ? mpq_class(unit_ * scale) : mpq_class(unit_, scale);
        out.canonicalize();
        return out;
    }

    PAdicDigits operator-() const {
        if (state_ != State::nonzero) return *this;
        mpz_class pm = pow_p(ctx_, static_cast<unsigned long>(known_));
        return PAdicDigits(ctx_, State::nonzero, val_, mpz_class(pm - unit_), known_);
    }

    friend PAdicDigits operator+(const PAdicDigits& a, const PAdicDigits& b) {
        a.require_same(b);
        if (a.is_exact_zero()) return b;
        if (b.is_exact_zero()) return a;

        const long ku = std::min(a.known_until(), b.known_until());
        long vmin = std::numeric_limits<long>::max();
        if (a.state_ == State::nonzero) vmin = std::min(vmin, a.val_);
        if (b.state_ == State::nonzero) vmin = std::min(vmin, b.val_);
        if (vmin >= ku) {
            // nothing is known below the common precision horizon
            return PAdicDigits(a.ctx_, State::zero_at_precision, ku, 0, 0);
        }
        const long m = ku - vmin;
        mpz_class pm = pow_p(a.ctx_, static_cast<unsigned long>(m));
        mpz_class z(0);
        if (a.state_ == State::nonzero) {
            z += a.unit_ * pow_p(a.ctx_, static_cast<unsigned long>(a.val_ - vmin));
        }
        if (b.state_ == State::nonzero) {
            z += b.unit_ * pow_p(b.ctx_, static_cast<unsigned long>(b.val_ - vmin));
        }
        z %= pm;
        if (z == 0) return PAdicDigits(a.ctx_, State::zero_at_precision, ku, 0, 0);

        mpz_class pz(a.prime());
        const long shift = static_cast<long>(mpz_remove(z.get_mpz_t(), z.get_mpz_t(), pz.get_mpz_t()));
        const long val = vmin + shift;
        return PAdicDigits(a.ctx_, State::nonzero, val, std::move(z), ku - val);
    }

    friend PAdicDigits operator-(const PAdicDigits& a, const PAdicDigits& b) { return a + (-b); }

    friend PAdicDigits operator*(const PAdicDigits& a, const PAdicDigits& b) {
        a.require_same(b);
        if (a.is_exact_zero() || b.is_exact_zero()) return zero(a.ctx_);
        if (a.is_flagged_zero() || b.is_flagged_zero()) {
            // valuations (or bounds) add; nothing more is known
            return PAdicDigits(a.ctx_, State::zero_at_precision, a.val_ + b.val_, 0, 0);
        }
        const long m = std::min(a.known_, b.known_);
        mpz_class pm = pow_p(a.ctx_, static_cast<unsigned long>(m));
        mpz_class u = (a.unit_ * b.unit_) % pm;
        return PAdicDigits(a.ctx_, State::nonzero, a.val_ + b.val_, std::move(u), m);
    }

    friend PAdicDigits operator/(const PAdicDigits& a, const PAdicDigits& b) {
        return a * b.inv();
    }

    PAdicDigits inv() const {
        if (is_exact_zero()) throw precondition_error("PAdicDigits: inverse of zero");
        if (is_flagged_zero()) {
            throw precision_error(
                "PAdicDigits: inverse of a value indistinguishable from zero at precision "
                "(valuation >= " + std::to_string(val_) + ")");
        }
        mpz_class pm = pow_p(ctx_, static_cast<unsigned long>(known_));
        mpz_class u;
        mpz_invert(u.get_mpz_t(), unit_.get_mpz_t(), pm.get_mpz_t());
        if (u < 0) u += pm;
        return PAdicDigits(ctx_, State::nonzero, -val_, std::move(u), known_);
    }

    friend bool operator==(const PAdicDigits& a, const PAdicDigits& b) {
        return a.ctx_ == b.ctx_ && a.state_ == b.state_ && a.val_ == b.val_ &&
               a.known_ == b.known_ && a.unit_ == b.unit_;
    }

    /// True when both values agree modulo p^min(known horizons).
    bool agrees_with(const PAdicDigits& other) const {
        require_same(other);
        const long ku = std::min(known_until(), other.known_until());
        return (*this - other).valuation().norm_at_most(ku);
    }

private:
    enum class State { nonzero, zero, zero_at_precision };

    PAdicDigits(Context ctx, State s, long val, mpz_class unit, long known)
        : ctx_(ctx), state_(s), val_(val), unit_(std::move(unit)), known_(known) {}

    // absolute exponent up to which the value is known
    long known_until() const {
        switch (state_) {
            case State::nonzero: return val_ + known_;
            case State::zero_at_precision: return val_;
            case State::zero: return std::numeric_limits<long>::max() / 2;
        }
        return 0;
    }

    void require_same(const PAdicDigits& other) const {
        if (!(ctx_ == other.ctx_)) {
            throw precondition_error("PAdicDigits: mixed contexts in one operation");
        }
    }

    static mpz_class pow_p(const Context& ctx, unsigned long e) {
        mpz_class r;
        mpz_ui_pow_ui(r.get_mpz_t(), ctx.prime.value(), e);
        return r;
    }

    Context ctx_;
    State state_;
    long val_;        // valuation (nonzero) or known bound (zero_at_precision)
    mpz_class unit_;  // unit part in [1, p^known), p does not divide it
    long known_;      // known digit count (nonzero state only)
};

} // namespace qgibbs
