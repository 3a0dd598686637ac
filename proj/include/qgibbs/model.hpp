#pragma once

#include <qgibbs/c0.hpp>
#include <qgibbs/errors.hpp>
#include <qgibbs/padic.hpp>
#include <qgibbs/tree.hpp>

#include <map>
#include <optional>
#include <variant>
#include <vector>

namespace qgibbs {

/// Weight sequence lambda(0..q_trunc) with the gauge normalization
/// lambda(0) = 1 baked in. delta = max_{i>=1} |lambda(i)|_p is the
/// contraction bound of the whole theory.
template <padic_number Num>
class WeightSequence {
public:
    using Context = typename Num::Context;

    /// tail = (lambda(1), ..., lambda(q_trunc)).
    WeightSequence(const Context& ctx, std::vector<Num> tail)
        : ctx_(ctx), tail_(std::move(tail)) {}

    const Context& context() const { return ctx_; }
    unsigned q_trunc() const { return static_cast<unsigned>(tail_.size()); }

    /// lambda(i), i in [0, q_trunc]; lambda(0) is the constant 1.
    Num lambda(unsigned i) const {
        if (i == 0) return Num::one(ctx_);
        if (i > tail_.size()) throw precondition_error("WeightSequence: index out of range");
        return tail_[i - 1];
    }

    /// The tail as a c0 vector (the canonical solver start: the theta = 1
    /// fixed point).
    C0Vector<Num> tail_vector() const { return C0Vector<Num>(ctx_, tail_); }

    /// Valuation of delta = max_{i>=1} |lambda(i)|_p; infinite when every
    /// tail weight is zero (single effective state).
    Valuation delta_valuation() const {
        Valuation v = Valuation::infinite();
        for (const auto& l : tail_) v = min_exact(v, l.valuation());
        return v;
    }

    /// |lambda(i)|_p <= delta for all i >= 1 with delta <= p^{-e}.
    bool delta_at_most(long e) const {
        const Valuation v = delta_valuation();
        return v.norm_at_most(e);
    }

private:
    Context ctx_;
    std::vector<Num> tail_; // lambda(1..q_trunc); exact zeros allowed
};

/// Exponent assignment N_xy for the coupling theta_xy = frak_p^{N_xy}.
///
/// Periodic mode classes an edge <x,y> (y a direct successor of x) by the
/// child level mod m, matching the per-class reduction of the recurrence.
template <padic_number Num>
class CouplingAssignment {
public:
    struct Homogeneous {
        long exponent;
    };
    struct Periodic {
        unsigned m;
        std::vector<long> exponents_by_class; // size m
    };
    struct PerEdge {
        std::map<TreeVertex, long> by_child; // each non-root vertex keys its parent edge
    };
    using Mode = std::variant<Homogeneous, Periodic, PerEdge>;

    CouplingAssignment(Num base, Mode mode) : base_(std::move(base)), mode_(std::move(mode)) {
        if (base_.is_zero_like()) {
            throw precondition_error("CouplingAssignment: parameter must be nonzero");
        }
        if (!base_.valuation().norm_at_most(0)) {
            throw precondition_error("CouplingAssignment: |parameter|_p <= 1 required");
        }
        if (const auto* p = std::get_if<Periodic>(&mode_)) {
            if (p->m < 1 || p->exponents_by_class.size() != p->m) {
                throw precondition_error("CouplingAssignment: periodic class table size != m");
            }
        }
    }

    const Num& base() const { return base_; }
    const Mode& mode() const { return mode_; }

    bool is_homogeneous() const { return std::holds_alternative<Homogeneous>(mode_); }
    bool is_periodic() const { return std::holds_alternative<Periodic>(mode_); }
    bool is_per_edge() const { return std::holds_alternative<PerEdge>(mode_); }

    unsigned period() const {
        if (const auto* p = std::get_if<Periodic>(&mode_)) return p->m;
        return 1;
    }

    /// N_xy for the edge from parent x to child y.
    long exponent_for_edge(const TreeVertex& parent, const TreeVertex& child) const {
        if (const auto* h = std::get_if<Homogeneous>(&mode_)) return h->exponent;
        if (const auto* p = std::get_if<Periodic>(&mode_)) {
            return p->exponents_by_class[child.level() % p->m];
        }
        const auto& m = std::get<PerEdge>(mode_).by_child;
        const auto it = m.find(child);
        if (it == m.end()) {
            throw precondition_error("CouplingAssignment: no exponent for edge to " +
                                     child.to_string());
        }
        (void)parent;
        return it->second;
    }

    Num theta_for_edge(const TreeVertex& parent, const TreeVertex& child) const {
        return pow(base_, exponent_for_edge(parent, child));
    }

    /// theta for periodic class c (edges whose child level is c mod m).
    Num theta_for_class(unsigned c) const {
        if (const auto* h = std::get_if<Homogeneous>(&mode_)) {
            (void)c;
            return pow(base_, h->exponent);
        }
        const auto& p = std::get<Periodic>(mode_);
        return pow(base_, p.exponents_by_class[c % p.m]);
    }

    /// All exponents known to this assignment (for validation).
    std::vector<long> all_exponents() const {
        if (const auto* h = std::get_if<Homogeneous>(&mode_)) return {h->exponent};
        if (const auto* p = std::get_if<Periodic>(&mode_)) return p->exponents_by_class;
        std::vector<long> out;
        for (const auto& [v, n] : std::get<PerEdge>(mode_).by_child) out.push_back(n);
        return out;
    }

private:
    Num base_;
    Mode mode_;
};

enum class MeasureKind {
    quasi_gibbs, // Boltzmann factor frak_p^{H_n}
    gibbs        // Boltzmann factor exp_p{H_n + sum of boundary fields}
};

/// Full model description shared by the solver and the measures.
template <padic_number Num>
struct ModelSpec {
    using Context = typename Num::Context;

    Context ctx;
    CayleyTree tree;
    CouplingAssignment<Num> coupling;
    WeightSequence<Num> weights;
    MeasureKind kind = MeasureKind::quasi_gibbs;
    long exp_target_valuation = 32; // working precision of exp_p (gibbs kind)

    unsigned q_trunc() const { return weights.q_trunc(); }
    unsigned long prime() const { return ctx.prime.value(); }
    unsigned spin_states() const { return weights.q_trunc() + 1; }
};

} // namespace qgibbs
