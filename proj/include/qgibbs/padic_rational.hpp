#pragma once

#include <qgibbs/errors.hpp>
#include <qgibbs/prime.hpp>
#include <qgibbs/valuation.hpp>

#include <gmpxx.h>

#include <string>
#include <utility>

namespace qgibbs {

/// Construction context for the exact rational backend.
struct RationalContext {
    Prime prime;

    friend bool operator==(const RationalContext&, const RationalContext&) = default;
};

/// Element of Q_p represented exactly as a rational number.
///
/// This backend is the ground truth for everything in the library: every
/// model quantity is rational when the parameter 𝔭 is, so identities can be
/// tested as exact equalities. The p-adic structure (valuation, norm) is
/// computed from the factorization of numerator and denominator.
///
/// Values are immutable after construction; all operations are pure.
class PAdicRational {
public:
    using Context = RationalContext;

    static PAdicRational zero(const Context& ctx) { return PAdicRational(ctx, mpq_class(0)); }
    static PAdicRational one(const Context& ctx) { return PAdicRational(ctx, mpq_class(1)); }

    static PAdicRational from_integer(const Context& ctx, long n) {
        return PAdicRational(ctx, mpq_class(static_cast<signed long>(n)));
    }

    static PAdicRational from_mpq(const Context& ctx, mpq_class q) {
        q.canonicalize();
        return PAdicRational(ctx, std::move(q));
    }

    static PAdicRational from_fraction(const Context& ctx, const mpz_class& num,
                                       const mpz_class& den) {
        if (den == 0) throw precondition_error("PAdicRational: zero denominator");
        mpq_class q(num, den);
        q.canonicalize();
        return PAdicRational(ctx, std::move(q));
    }

    const Context& context() const { return ctx_; }
    unsigned long prime() const { return ctx_.prime.value(); }
    const mpq_class& value() const { return q_; }

    bool is_exact_zero() const { return q_ == 0; }
    bool is_zero_like() const { return is_exact_zero(); }

    /// Exact p-adic valuation; +inf for zero.
    Valuation valuation() const {
        if (is_exact_zero()) return Valuation::infinite();
        return Valuation::finite(val_);
    }

    /// |x|_p as an exact rational: p^{-v}, 0 for zero.
    mpq_class norm() const {
        if (is_exact_zero()) return mpq_class(0);
        mpz_class pw;
        mpz_ui_pow_ui(pw.get_mpz_t(), prime(), static_cast<unsigned long>(val_ < 0 ? -val_ : val_));
        return val_ >= 0 ? mpq_class(1, pw) : mpq_class(pw);
    }

    PAdicRational operator-() const { return PAdicRational(ctx_, mpq_class(-q_)); }

    friend PAdicRational operator+(const PAdicRational& a, const PAdicRational& b) {
        a.require_same(b);
        return PAdicRational(a.ctx_, mpq_class(a.q_ + b.q_));
    }
    friend PAdicRational operator-(const PAdicRational& a, const PAdicRational& b) {
        a.require_same(b);
        return PAdicRational(a.ctx_, mpq_class(a.q_ - b.q_));
    }
    friend PAdicRational operator*(const PAdicRational& a, const PAdicRational& b) {
        a.require_same(b);
        return PAdicRational(a.ctx_, mpq_class(a.q_ * b.q_));
    }
    friend PAdicRational operator/(const PAdicRational& a, const PAdicRational& b) {
        return a * b.inv();
    }

    PAdicRational inv() const {
        if (is_exact_zero()) throw precondition_error("PAdicRational: inverse of zero");
        return PAdicRational(ctx_, mpq_class(1 / q_));
    }

    friend bool operator==(const PAdicRational& a, const PAdicRational& b) {
        return a.ctx_ == b.ctx_ && a.q_ == b.q_;
    }

    /// Canonical digit truncation: the unique y = p^v * c, 0 <= c < p^{T-v},
    /// with x ≡ y (mod p^T). Values with valuation >= T truncate to zero.
    PAdicRational reduced_mod(long T) const {
        if (is_exact_zero() || val_ >= T) return zero(ctx_);
        const unsigned long m = static_cast<unsigned long>(T - val_);
        mpz_class pm;
        mpz_ui_pow_ui(pm.get_mpz_t(), prime(), m);

        // unit part a/b with p dividing neither
        mpz_class a = q_.get_num(), b = q_.get_den(), tmp;
        mpz_class pz(static_cast<unsigned long>(prime()));
        mpz_remove(a.get_mpz_t(), a.get_mpz_t(), pz.get_mpz_t());
        mpz_remove(b.get_mpz_t(), b.get_mpz_t(), pz.get_mpz_t());

        mpz_class binv;
        if (mpz_invert(binv.get_mpz_t(), b.get_mpz_t(), pm.get_mpz_t()) == 0) {
            throw precondition_error("PAdicRational: reduction denominator not invertible");
        }
        mpz_class c = (a * binv) % pm;
        if (c < 0) c += pm;

        mpz_class scale;
        mpz_ui_pow_ui(scale.get_mpz_t(), prime(),
                      static_cast<unsigned long>(val_ < 0 ? -val_ : val_));
        mpq_class out = val_ >= 0 ? mpq_class(c * scale) : mpq_class(c, scale);
        out.canonicalize();
        return PAdicRational(ctx_, std::move(out));
    }

private:
    PAdicRational(Context ctx, mpq_class q) : ctx_(ctx), q_(std::move(q)), val_(0) {
        if (q_ != 0) {
            mpz_class tmp;
            mpz_class pz(static_cast<unsigned long>(prime()));
            const long vn = static_cast<long>(
                mpz_remove(tmp.get_mpz_t(), q_.get_num().get_mpz_t(), pz.get_mpz_t()));
            const long vd = static_cast<long>(
                mpz_remove(tmp.get_mpz_t(), q_.get_den().get_mpz_t(), pz.get_mpz_t()));
            val_ = vn - vd;
        }
    }

    void require_same(const PAdicRational& other) const {
        if (!(ctx_ == other.ctx_)) {
            throw precondition_error("PAdicRational: mixed primes in one operation");
        }
    }

    Context ctx_;
    mpq_class q_;
    long val_;
};

} // namespace qgibbs
