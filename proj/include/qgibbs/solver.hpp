#pragma once

#include <qgibbs/c0.hpp>
#include <qgibbs/errors.hpp>
#include <qgibbs/model.hpp>
#include <qgibbs/padic.hpp>
#include <qgibbs/tree.hpp>

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace qgibbs {

// ---------------------------------------------------------------------------
// The boundary-field recursion maps
// ---------------------------------------------------------------------------

/// F(x; theta), componentwise ((theta-1) x_i + sum_j x_j + 1) / (sum_j x_j + theta).
/// The denominator is a unit whenever ||x|| < 1 <= |theta|_p; an actually
/// vanishing denominator is reported with its valuation.
template <padic_number Num>
C0Vector<Num> f_map(const C0Vector<Num>& x, const Num& theta) {
    const auto& ctx = x.context();
    const Num sum = x.component_sum();
    const Num denom = sum + theta;
    if (denom.is_exact_zero()) {
        throw precondition_error("f_map: denominator sum x_j + theta is exactly zero");
    }
    if (denom.is_zero_like()) {
        throw precision_error("f_map: denominator vanishes at working precision (valuation " +
                              denom.valuation().to_string() + ")");
    }
    const Num denom_inv = denom.inv();
    const Num tm1 = theta - Num::one(ctx);
    const Num sp1 = sum + Num::one(ctx);

    C0Vector<Num> out(ctx, x.q_trunc());
    for (unsigned i = 1; i <= x.q_trunc(); ++i) {
        out.set(i, (tm1 * x[i] + sp1) * denom_inv);
    }
    return out;
}

/// The homogeneous one-level map: (F_tau(x))_i = lambda(i) * F_i(x; theta)^k.
/// Maps B_delta into itself and contracts by delta there.
template <padic_number Num>
C0Vector<Num> f_tau(const C0Vector<Num>& x, const Num& theta,
                    const WeightSequence<Num>& weights, unsigned k) {
    if (weights.q_trunc() != x.q_trunc()) {
        throw precondition_error("f_tau: weight/vector truncation mismatch");
    }
    const C0Vector<Num> f = f_map(x, theta);
    C0Vector<Num> out(x.context(), x.q_trunc());
    for (unsigned i = 1; i <= x.q_trunc(); ++i) {
        out.set(i, weights.lambda(i) * pow(f[i], static_cast<long>(k)));
    }
    return out;
}

/// The m-fold periodic composition applied in class order 0, 1, ..., m-1
/// (theta_0 innermost). Contracts by delta^m on B_delta.
template <padic_number Num>
C0Vector<Num> periodic_compose(const C0Vector<Num>& x, const CouplingAssignment<Num>& coupling,
                               const WeightSequence<Num>& weights, unsigned k) {
    if (!coupling.is_periodic() && !coupling.is_homogeneous()) {
        throw precondition_error("periodic_compose: periodic coupling required");
    }
    const unsigned m = coupling.period();
    C0Vector<Num> cur = x;
    for (unsigned c = 0; c < m; ++c) {
        cur = f_tau(cur, coupling.theta_for_class(c), weights, k);
    }
    return cur;
}

// ---------------------------------------------------------------------------
// Boundary fields
// ---------------------------------------------------------------------------

/// Assignment x -> hat h_x in hat-normalized form (components 1..q_trunc),
/// in one of three representations.
template <padic_number Num>
class BoundaryField {
public:
    struct TranslationInvariant {
        C0Vector<Num> value;
    };
    struct Periodic {
        unsigned m;
        std::vector<C0Vector<Num>> by_class; // class = vertex level mod m
    };
    struct Explicit {
        unsigned depth;
        std::map<TreeVertex, C0Vector<Num>> values; // all x in V_depth \ {root}
    };
    using Rep = std::variant<TranslationInvariant, Periodic, Explicit>;

    explicit BoundaryField(Rep rep) : rep_(std::move(rep)) {}

    static BoundaryField translation_invariant(C0Vector<Num> v) {
        return BoundaryField(TranslationInvariant{std::move(v)});
    }
    static BoundaryField periodic(std::vector<C0Vector<Num>> by_class) {
        const unsigned m = static_cast<unsigned>(by_class.size());
        return BoundaryField(Periodic{m, std::move(by_class)});
    }
    static BoundaryField explicit_field(unsigned depth, std::map<TreeVertex, C0Vector<Num>> v) {
        return BoundaryField(Explicit{depth, std::move(v)});
    }

    const Rep& rep() const { return rep_; }
    bool is_translation_invariant() const { return std::holds_alternative<TranslationInvariant>(rep_); }
    bool is_periodic() const { return std::holds_alternative<Periodic>(rep_); }
    bool is_explicit() const { return std::holds_alternative<Explicit>(rep_); }

    /// hat h_x for a non-root vertex.
    const C0Vector<Num>& at(const TreeVertex& x) const {
        if (x.is_root()) throw precondition_error("BoundaryField: no field at the root");
        if (const auto* ti = std::get_if<TranslationInvariant>(&rep_)) return ti->value;
        if (const auto* pr = std::get_if<Periodic>(&rep_)) {
            return pr->by_class[x.level() % pr->m];
        }
        const auto& ex = std::get<Explicit>(rep_);
        const auto it = ex.values.find(x);
        if (it == ex.values.end()) {
            throw precondition_error("BoundaryField: no vector stored for " + x.to_string());
        }
        return it->second;
    }

private:
    Rep rep_;
};

// ---------------------------------------------------------------------------
// The per-vertex recurrence
// ---------------------------------------------------------------------------

/// Right-hand side of the per-vertex equation at x:
/// component i = (lambda(i)/lambda(0)) * prod over children y of F_i(hat h_y; theta_xy).
template <padic_number Num>
C0Vector<Num> recurrence_rhs(const ModelSpec<Num>& spec, const BoundaryField<Num>& field,
                             const TreeVertex& x) {
    const auto& ctx = spec.ctx;
    const unsigned q = spec.q_trunc();
    C0Vector<Num> acc(ctx, q);
    for (unsigned i = 1; i <= q; ++i) acc.set(i, spec.weights.lambda(i));
    for (const auto& y : spec.tree.successors(x)) {
        const Num theta = spec.coupling.theta_for_edge(x, y);
        const C0Vector<Num> f = f_map(field.at(y), theta);
        for (unsigned i = 1; i <= q; ++i) acc.set(i, acc[i] * f[i]);
    }
    return acc;
}

/// Backward construction of an explicit field: given vectors on the outer
/// level W_depth, fill levels depth-1 down to 1 through the recurrence.
/// Every interior vertex satisfies the per-vertex equation exactly by
/// construction.
template <padic_number Num>
BoundaryField<Num> backward_field(const ModelSpec<Num>& spec, unsigned depth,
                                  const std::map<TreeVertex, C0Vector<Num>>& boundary) {
    if (depth < 1 || depth > spec.tree.depth()) {
        throw precondition_error("backward_field: depth out of range");
    }
    const unsigned q = spec.q_trunc();
    std::map<TreeVertex, C0Vector<Num>> values;
    for (const auto& y : spec.tree.enumerate_level(depth)) {
        const auto it = boundary.find(y);
        if (it == boundary.end()) {
            throw precondition_error("backward_field: boundary vector missing for " +
                                     y.to_string());
        }
        if (it->second.q_trunc() != q) {
            throw precondition_error("backward_field: boundary truncation mismatch");
        }
        values.emplace(y, it->second);
    }
    for (unsigned level = depth; level-- > 1;) {
        for (const auto& x : spec.tree.enumerate_level(level)) {
            C0Vector<Num> acc(spec.ctx, q);
            for (unsigned i = 1; i <= q; ++i) acc.set(i, spec.weights.lambda(i));
            for (const auto& y : spec.tree.successors(x)) {
                const Num theta = spec.coupling.theta_for_edge(x, y);
                const C0Vector<Num> f = f_map(values.at(y), theta);
                for (unsigned i = 1; i <= q; ++i) acc.set(i, acc[i] * f[i]);
            }
            values.emplace(x, std::move(acc));
        }
    }
    return BoundaryField<Num>::explicit_field(depth, std::move(values));
}

/// Same, with a constant boundary vector on W_depth.
template <padic_number Num>
BoundaryField<Num> backward_field(const ModelSpec<Num>& spec, unsigned depth,
                                  const C0Vector<Num>& boundary_value) {
    std::map<TreeVertex, C0Vector<Num>> boundary;
    for (const auto& y : spec.tree.enumerate_level(depth)) boundary.emplace(y, boundary_value);
    return backward_field(spec, depth, boundary);
}

/// Expand a compact (translation-invariant or periodic) field to an explicit
/// one on V_depth through the per-vertex equation: the compact vector seeds
/// the outer level and the interior is recomputed exactly, so the result
/// satisfies the recurrence exactly at every interior vertex.
template <padic_number Num>
BoundaryField<Num> expand_field(const ModelSpec<Num>& spec, const BoundaryField<Num>& field,
                                unsigned depth) {
    if (field.is_explicit()) return field;
    std::map<TreeVertex, C0Vector<Num>> boundary;
    for (const auto& y : spec.tree.enumerate_level(depth)) boundary.emplace(y, field.at(y));
    return backward_field(spec, depth, boundary);
}

// ---------------------------------------------------------------------------
// Recurrence verification
// ---------------------------------------------------------------------------

template <padic_number Num>
struct RecurrenceReport {
    struct LevelSummary {
        unsigned level;
        bool exact_zero;      // every residual at this level is exactly zero
        long worst_bound;     // residual norms <= p^{-worst_bound} guaranteed
        bool worst_is_exact;  // some residual has exactly this valuation
    };
    struct Violation {
        TreeVertex vertex;
        unsigned component;
        Valuation residual;
    };

    std::vector<LevelSummary> levels;
    std::vector<Violation> violations; // residuals that are not exactly zero

    bool all_exact_zero() const {
        for (const auto& l : levels) {
            if (!l.exact_zero) return false;
        }
        return true;
    }
    bool all_residuals_at_most(long t) const {
        for (const auto& l : levels) {
            if (!l.exact_zero && l.worst_bound < t) return false;
        }
        return true;
    }
};

/// Check the per-vertex equation at every vertex of levels 1..depth-1 of an
/// explicit field. Violations are report content, never errors.
template <padic_number Num>
RecurrenceReport<Num> verify_recurrence(const ModelSpec<Num>& spec,
                                        const BoundaryField<Num>& field, unsigned depth) {
    if (!field.is_explicit()) {
        throw precondition_error("verify_recurrence: explicit field required");
    }
    RecurrenceReport<Num> report;
    for (unsigned level = 1; level + 1 <= depth; ++level) {
        typename RecurrenceReport<Num>::LevelSummary summary{level, true, 0, false};
        bool first = true;
        for (const auto& x : spec.tree.enumerate_level(level)) {
            const C0Vector<Num> rhs = recurrence_rhs(spec, field, x);
            const C0Vector<Num>& lhs = field.at(x);
            for (unsigned i = 1; i <= spec.q_trunc(); ++i) {
                const Valuation v = (lhs[i] - rhs[i]).valuation();
                if (!v.is_infinite()) {
                    summary.exact_zero = false;
                    report.violations.push_back({x, i, v});
                    if (first || v.lower_bound() < summary.worst_bound) {
                        summary.worst_bound = v.lower_bound();
                        summary.worst_is_exact = v.is_finite();
                        first = false;
                    }
                }
            }
        }
        report.levels.push_back(summary);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Gauge normalization
// ---------------------------------------------------------------------------

/// Per-vertex raw activity vectors over spins 0..q_trunc.
template <padic_number Num>
struct RawField {
    unsigned depth = 0;
    std::map<TreeVertex, std::vector<Num>> values; // size q_trunc + 1, index = spin
};

/// hat h_i = h_i lambda(i) / (h_0 lambda(0)). Requires h_0 != 0.
/// Invariant under h -> c h for any nonzero scalar c.
template <padic_number Num>
BoundaryField<Num> normalize_field(const RawField<Num>& raw, const WeightSequence<Num>& weights) {
    std::map<TreeVertex, C0Vector<Num>> out;
    const unsigned q = weights.q_trunc();
    for (const auto& [x, h] : raw.values) {
        if (h.size() != q + 1) {
            throw precondition_error("normalize_field: raw vector size != q_trunc + 1");
        }
        if (h[0].is_zero_like()) {
            throw precondition_error("normalize_field: h_0 = 0 at " + x.to_string());
        }
        const Num scale = (h[0] * weights.lambda(0)).inv();
        C0Vector<Num> v(weights.context(), q);
        for (unsigned i = 1; i <= q; ++i) {
            v.set(i, h[i] * weights.lambda(i) * scale);
        }
        out.emplace(x, std::move(v));
    }
    return BoundaryField<Num>::explicit_field(raw.depth, std::move(out));
}

/// Reconstruct raw activities in the canonical gauge h_0 = 1:
/// h_i = hat h_i / lambda(i) where lambda(i) != 0, and 0 on null weights.
template <padic_number Num>
RawField<Num> denormalize_field(const ModelSpec<Num>& spec, const BoundaryField<Num>& field,
                                unsigned depth) {
    const BoundaryField<Num> ex = expand_field(spec, field, depth);
    const auto& weights = spec.weights;
    RawField<Num> out;
    out.depth = depth;
    const unsigned q = weights.q_trunc();
    for (unsigned level = 1; level <= depth; ++level) {
        for (const auto& x : spec.tree.enumerate_level(level)) {
            const C0Vector<Num>& v = ex.at(x);
            std::vector<Num> h;
            h.reserve(q + 1);
            h.push_back(Num::one(spec.ctx));
            for (unsigned i = 1; i <= q; ++i) {
                const Num li = weights.lambda(i);
                h.push_back(li.is_exact_zero() ? Num::zero(spec.ctx) : v[i] / li);
            }
            out.values.emplace(x, std::move(h));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Fixed-point solve with contraction certification
// ---------------------------------------------------------------------------

template <padic_number Num>
struct SolveOptions {
    long target_valuation = 24; // certify ||x - x*|| <= p^{-target}
    long truncation_guard = 8;  // iterates are truncated mod p^{target+guard}
    std::size_t max_iterations = 256;
    bool allow_delta_one = false;
    std::optional<std::vector<C0Vector<Num>>> start; // one vector per class
};

enum class SolveStatus {
    converged,      // stationary point reached, certificate complete
    non_contraction, // a recorded ratio exceeded delta; aborted
    no_convergence   // iteration cap hit without stationarity
};

struct ConvergenceSteps {
    std::vector<Valuation> deltas;      // sup-norm valuation of x_{n+1} - x_n
    std::vector<long> ratio_exponents;  // consecutive finite-delta gaps
    bool ratios_within_bound = true;
    std::size_t target_reached_at = 0;  // first iteration with delta <= p^{-target}, 0 = never
};

template <padic_number Num>
struct ConvergenceCertificate {
    std::vector<C0Vector<Num>> start;                  // per class
    Valuation delta_bound = Valuation::infinite();     // valuation of delta = max |lambda(i)|
    long target_valuation = 0;
    long truncation = 0;
    std::size_t iterations = 0;
    ConvergenceSteps steps;
    bool stationary = false;
    Valuation stationary_bound = Valuation::infinite();
    std::string diagnostics;
};

template <padic_number Num>
struct SolveResult {
    SolveStatus status;
    BoundaryField<Num> field;
    ConvergenceCertificate<Num> certificate;

    bool ok() const { return status == SolveStatus::converged; }
};

namespace detail {

inline PAdicRational truncate_iterate(const PAdicRational& x, long T) { return x.reduced_mod(T); }
inline const PAdicDigits& truncate_iterate(const PAdicDigits& x, long) { return x; }

template <padic_number Num>
C0Vector<Num> truncate_vector(const C0Vector<Num>& v, long T) {
    C0Vector<Num> out(v.context(), v.q_trunc());
    for (unsigned i = 1; i <= v.q_trunc(); ++i) out.set(i, truncate_iterate(v[i], T));
    return out;
}

} // namespace detail

/// Solve the boundary-field fixed point by contraction iteration.
///
/// Homogeneous couplings iterate F_tau; periodic ones iterate the joint
/// per-class relation map (class i pulls from class i+1 mod m), which
/// contracts by delta per step and whose fixed point is the periodic
/// solution. Iterates are canonically truncated mod p^T (rational backend),
/// which keeps the arithmetic exact on bounded numbers; the truncated map
/// reaches an exactly stationary point, unique independently of the start,
/// within p^{-T} of the true fixed point.
template <padic_number Num>
SolveResult<Num> solve_fixed_point(const ModelSpec<Num>& spec, const SolveOptions<Num>& opts) {
    const auto& weights = spec.weights;
    const auto& coupling = spec.coupling;
    if (coupling.is_per_edge()) {
        throw precondition_error(
            "solve_fixed_point: per-edge couplings admit no compact fixed point; build the "
            "field by backward recursion from a boundary instead");
    }

    const Valuation delta = weights.delta_valuation();
    if (!delta.norm_at_most(1)) {
        if (!(delta.norm_exactly(0) && opts.allow_delta_one)) {
            throw precondition_error(
                "solve_fixed_point: contraction requires delta <= 1/p (delta valuation " +
                delta.to_string() + "); delta = 1 runs only with the explicit override");
        }
    }
    const unsigned m = coupling.period();
    for (unsigned c = 0; c < m; ++c) {
        const Num theta = coupling.theta_for_class(c);
        if (!theta.valuation().is_finite() || theta.valuation().value() > 0) {
            throw precondition_error(
                "solve_fixed_point: |theta|_p >= 1 required (coupling exponents must be <= 0)");
        }
    }

    const long T = opts.target_valuation + opts.truncation_guard;
    const unsigned k = spec.tree.order();
    const long d = delta.is_finite() ? delta.value() : 0; // contraction exponent

    std::vector<C0Vector<Num>> state;
    if (opts.start) {
        state = *opts.start;
        if (state.size() != m) {
            throw precondition_error("solve_fixed_point: start must provide one vector per class");
        }
        for (const auto& v : state) {
            if (v.q_trunc() != spec.q_trunc()) {
                throw precondition_error("solve_fixed_point: start truncation mismatch");
            }
            if (delta.is_finite() && !v.norm_at_most(d)) {
                throw precondition_error("solve_fixed_point: start lies outside B_delta");
            }
        }
    } else {
        state.assign(m, weights.tail_vector());
    }

    ConvergenceCertificate<Num> cert;
    cert.start = state;
    cert.delta_bound = delta;
    cert.target_valuation = opts.target_valuation;
    cert.truncation = T;

    auto step = [&](const std::vector<C0Vector<Num>>& cur) {
        std::vector<C0Vector<Num>> next;
        next.reserve(m);
        for (unsigned i = 0; i < m; ++i) {
            const unsigned j = (i + 1) % m;
            next.push_back(detail::truncate_vector(
                f_tau(cur[j], coupling.theta_for_class(j), weights, k), T));
        }
        return next;
    };

    auto finish = [&](SolveStatus status) {
        BoundaryField<Num> field =
            m == 1 ? BoundaryField<Num>::translation_invariant(state[0])
                   : BoundaryField<Num>::periodic(state);
        return SolveResult<Num>{status, std::move(field), cert};
    };

    std::optional<long> prev_delta_exp;
    for (std::size_t iter = 1; iter <= opts.max_iterations; ++iter) {
        std::vector<C0Vector<Num>> next = step(state);

        bool have_finite = false, have_bound = false;
        long min_finite = 0, min_bound = 0;
        for (unsigned i = 0; i < m; ++i) {
            const Valuation vi = (next[i] - state[i]).sup_norm_valuation();
            if (vi.is_finite()) {
                if (!have_finite || vi.value() < min_finite) min_finite = vi.value();
                have_finite = true;
            } else if (vi.is_lower_bound()) {
                if (!have_bound || vi.lower_bound() < min_bound) min_bound = vi.lower_bound();
                have_bound = true;
            }
        }
        Valuation dv = Valuation::infinite();
        if (have_finite && (!have_bound || min_finite < min_bound)) {
            dv = Valuation::finite(min_finite);
        } else if (have_bound) {
            dv = Valuation::at_least(min_bound);
        }

        cert.steps.deltas.push_back(dv);
        cert.iterations = iter;
        state = std::move(next);

        if (dv.norm_at_most(opts.target_valuation) && cert.steps.target_reached_at == 0) {
            cert.steps.target_reached_at = iter;
        }

        if (dv.is_infinite()) {
            cert.stationary = true;
            cert.stationary_bound = Valuation::infinite();
            return finish(SolveStatus::converged);
        }
        if (dv.is_lower_bound()) {
            // fixed-precision backend: the step is indistinguishable from zero
            cert.stationary = true;
            cert.stationary_bound = dv;
            if (dv.lower_bound() >= opts.target_valuation) {
                return finish(SolveStatus::converged);
            }
            cert.diagnostics = "stationary at precision below the target valuation";
            return finish(SolveStatus::no_convergence);
        }

        // contraction accounting on the exactly-known regime
        if (prev_delta_exp && *prev_delta_exp + d <= T) {
            const long ratio = dv.value() - *prev_delta_exp;
            cert.steps.ratio_exponents.push_back(ratio);
            if (ratio < d) {
                cert.steps.ratios_within_bound = false;
                cert.diagnostics = "contraction ratio p^-" + std::to_string(ratio) +
                                   " exceeds delta = p^-" + std::to_string(d) +
                                   " at iteration " + std::to_string(iter);
                return finish(SolveStatus::non_contraction);
            }
        }
        prev_delta_exp = dv.value();
    }

    cert.diagnostics = "iteration cap " + std::to_string(opts.max_iterations) +
                       " reached without a stationary point";
    return finish(SolveStatus::no_convergence);
}

} // namespace qgibbs
