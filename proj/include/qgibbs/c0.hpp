#pragma once

#include <qgibbs/errors.hpp>
#include <qgibbs/padic.hpp>

#include <vector>

namespace qgibbs {

/// Finitely supported element of c_0: components indexed 1..q_trunc over
/// Q_p, with the sup norm. Finite support makes the defining condition
/// |x_n|_p -> 0 structural, so membership in a ball B_delta is just a
/// componentwise valuation bound.
template <padic_number Num>
class C0Vector {
public:
    using Context = typename Num::Context;

    C0Vector(const Context& ctx, unsigned q_trunc)
        : ctx_(ctx), entries_(q_trunc, Num::zero(ctx)) {}

    C0Vector(const Context& ctx, std::vector<Num> entries)
        : ctx_(ctx), entries_(std::move(entries)) {}

    const Context& context() const { return ctx_; }
    unsigned q_trunc() const { return static_cast<unsigned>(entries_.size()); }

    /// Component x_i for i in [1, q_trunc].
    const Num& operator[](unsigned i) const {
        if (i < 1 || i > entries_.size()) {
            throw precondition_error("C0Vector: index out of range");
        }
        return entries_[i - 1];
    }

    void set(unsigned i, Num v) {
        if (i < 1 || i > entries_.size()) {
            throw precondition_error("C0Vector: index out of range");
        }
        entries_[i - 1] = std::move(v);
    }

    const std::vector<Num>& entries() const { return entries_; }

    /// Sum of all components (the series whose convergence the c_0
    /// condition guarantees; finite here by construction).
    Num component_sum() const {
        Num s = Num::zero(ctx_);
        for (const auto& e : entries_) s = s + e;
        return s;
    }

    /// Valuation of the sup norm: ||x|| = p^{-v}. Exact (finite/infinite)
    /// whenever every component has exact valuation or sits strictly below
    /// the finite minimum; a lower-bound kind otherwise.
    Valuation sup_norm_valuation() const {
        bool have_finite = false;
        long min_finite = 0;
        bool have_bound = false;
        long min_bound = 0;
        for (const auto& e : entries_) {
            const Valuation v = e.valuation();
            if (v.is_finite()) {
                if (!have_finite || v.value() < min_finite) min_finite = v.value();
                have_finite = true;
            } else if (v.is_lower_bound()) {
                if (!have_bound || v.lower_bound() < min_bound) min_bound = v.lower_bound();
                have_bound = true;
            }
        }
        if (!have_finite && !have_bound) return Valuation::infinite();
        if (!have_finite) return Valuation::at_least(min_bound);
        if (have_bound && min_bound <= min_finite) return Valuation::at_least(min_bound);
        return Valuation::finite(min_finite);
    }

    /// ||x|| <= p^{-e} guaranteed.
    bool norm_at_most(long e) const {
        for (const auto& c : entries_) {
            if (!c.valuation().norm_at_most(e)) return false;
        }
        return true;
    }

    friend C0Vector operator+(const C0Vector& a, const C0Vector& b) {
        a.require_compat(b);
        std::vector<Num> out;
        out.reserve(a.entries_.size());
        for (std::size_t i = 0; i < a.entries_.size(); ++i) {
            out.push_back(a.entries_[i] + b.entries_[i]);
        }
        return C0Vector(a.ctx_, std::move(out));
    }

    friend C0Vector operator-(const C0Vector& a, const C0Vector& b) {
        a.require_compat(b);
        std::vector<Num> out;
        out.reserve(a.entries_.size());
        for (std::size_t i = 0; i < a.entries_.size(); ++i) {
            out.push_back(a.entries_[i] - b.entries_[i]);
        }
        return C0Vector(a.ctx_, std::move(out));
    }

    friend bool operator==(const C0Vector& a, const C0Vector& b) {
        return a.ctx_ == b.ctx_ && a.entries_ == b.entries_;
    }

private:
    void require_compat(const C0Vector& other) const {
        if (!(ctx_ == other.ctx_) || entries_.size() != other.entries_.size()) {
            throw precondition_error("C0Vector: incompatible vectors");
        }
    }

    Context ctx_;
    std::vector<Num> entries_;
};

} // namespace qgibbs
