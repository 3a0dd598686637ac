#pragma once

#include <qgibbs/errors.hpp>
#include <qgibbs/model.hpp>
#include <qgibbs/solver.hpp>
#include <qgibbs/tree.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qgibbs {

// ---------------------------------------------------------------------------
// Configurations
// ---------------------------------------------------------------------------

/// Spin assignment over V_n, aligned with CayleyTree::enumerate_volume(n)
/// (root first, then levels in lexicographic order).
struct Configuration {
    std::vector<std::uint8_t> spins;

    bool touches_spin_at_least(unsigned q) const {
        for (auto s : spins) {
            if (s >= q) return true;
        }
        return false;
    }
};

/// Odometer over all spin assignments of `sites` sites with `states` states,
/// in lexicographic order (last site fastest).
class ConfigurationSpace {
public:
    ConfigurationSpace(std::size_t sites, unsigned states) : sites_(sites), states_(states) {}

    std::size_t sites() const { return sites_; }
    unsigned states() const { return states_; }

    /// states^sites, saturating at the budget sentinel.
    static std::size_t count(std::size_t sites, unsigned states, std::size_t cap) {
        std::size_t c = 1;
        for (std::size_t i = 0; i < sites; ++i) {
            if (c > cap / (states == 0 ? 1 : states)) return cap + 1;
            c *= states;
        }
        return c;
    }

    Configuration first() const { return Configuration{std::vector<std::uint8_t>(sites_, 0)}; }

    bool next(Configuration& c) const {
        for (std::size_t i = sites_; i-- > 0;) {
            if (c.spins[i] + 1u < states_) {
                ++c.spins[i];
                std::fill(c.spins.begin() + static_cast<long>(i) + 1, c.spins.end(), 0);
                return true;
            }
        }
        return false;
    }

private:
    std::size_t sites_;
    unsigned states_;
};

// ---------------------------------------------------------------------------
// Finite-volume measure
// ---------------------------------------------------------------------------

/// The finite-volume measure at depth n for a model and a raw boundary
/// field: value(sigma) = weight(sigma) / Z_n with
///   weight = frak_p^{H_n}  * prod_{x in W_n} h_{sigma(x),x} * prod_{x in V_n} lambda(sigma(x))
/// for the quasi-Gibbs kind, and
///   weight = exp_p{H_n + sum_{x in W_n} h_{sigma(x),x}} * prod_{x in V_n} lambda(sigma(x))
/// for the Gibbs kind. The partition function is computed once by exhaustive
/// enumeration, subject to the configuration budget.
template <padic_number Num>
class FiniteVolumeMeasure {
public:
    FiniteVolumeMeasure(const ModelSpec<Num>& spec, const RawField<Num>& field, unsigned n,
                        std::size_t budget = 2'000'000)
        : ctx_(spec.ctx),
          kind_(spec.kind),
          exp_target_(spec.exp_target_valuation),
          states_(spec.spin_states()),
          n_(n),
          base_(spec.coupling.base()),
          zero_(Num::zero(spec.ctx)) {
        vertices_ = spec.tree.enumerate_volume(n);
        const std::size_t total = ConfigurationSpace::count(vertices_.size(), states_, budget);
        if (total > budget) {
            throw budget_error("FiniteVolumeMeasure: " + std::to_string(vertices_.size()) +
                               " sites with " + std::to_string(states_) +
                               " states exceeds the configuration budget");
        }

        std::map<TreeVertex, std::size_t> index;
        for (std::size_t i = 0; i < vertices_.size(); ++i) index.emplace(vertices_[i], i);

        for (unsigned s = 0; s < states_; ++s) lambda_.push_back(spec.weights.lambda(s));

        for (const auto& [x, y] : spec.tree.enumerate_edges(n)) {
            edges_.push_back({index.at(x), index.at(y), spec.coupling.exponent_for_edge(x, y)});
        }

        for (const auto& y : spec.tree.enumerate_level(n)) {
            const auto it = field.values.find(y);
            if (it == field.values.end()) {
                throw precondition_error("FiniteVolumeMeasure: field missing at " + y.to_string());
            }
            if (it->second.size() != states_) {
                throw precondition_error("FiniteVolumeMeasure: field arity mismatch at " +
                                         y.to_string());
            }
            boundary_.emplace_back(index.at(y), it->second);
        }

        z_ = sum_weights();
        if (z_.is_exact_zero()) {
            throw precondition_error("FiniteVolumeMeasure: partition function is zero "
                                     "(degenerate spec)");
        }
        if (z_.is_zero_like()) {
            throw precision_error("FiniteVolumeMeasure: partition function vanishes at "
                                  "working precision");
        }
        z_inv_ = z_.inv();
    }

    unsigned n() const { return n_; }
    std::size_t site_count() const { return vertices_.size(); }
    unsigned states() const { return states_; }
    const std::vector<TreeVertex>& vertices() const { return vertices_; }
    const Num& partition_function() const { return z_; }

    ConfigurationSpace space() const { return ConfigurationSpace(vertices_.size(), states_); }

    long long hamiltonian(const Configuration& c) const {
        require_total(c);
        long long h = 0;
        for (const auto& e : edges_) {
            if (c.spins[e.parent] == c.spins[e.child]) h += e.exponent;
        }
        return h;
    }

    Num unnormalized_weight(const Configuration& c) const {
        require_total(c);
        Num lam = Num::one(ctx_);
        for (std::size_t i = 0; i < vertices_.size(); ++i) {
            const Num& l = lambda_[c.spins[i]];
            if (l.is_exact_zero()) return zero_;
            lam = lam * l;
        }
        const long long h = hamiltonian(c);
        if (kind_ == MeasureKind::quasi_gibbs) {
            Num w = pow(base_, static_cast<long>(h)) * lam;
            for (const auto& [idx, hv] : boundary_) {
                const Num& hx = hv[c.spins[idx]];
                if (hx.is_exact_zero()) return zero_;
                w = w * hx;
            }
            return w;
        }
        Num arg = Num::from_integer(ctx_, static_cast<long>(h));
        for (const auto& [idx, hv] : boundary_) arg = arg + hv[c.spins[idx]];
        return exp_p(arg, exp_target_) * lam;
    }

    Num value(const Configuration& c) const { return unnormalized_weight(c) * z_inv_; }

    /// Sum of value() over every configuration (the normalization identity).
    Num total_mass() const { return sum_weights() * z_inv_; }

    /// Measure of the cylinder fixing the given (site index -> spin) pairs.
    Num cylinder_measure(const std::map<std::size_t, std::uint8_t>& fixed) const {
        const ConfigurationSpace sp = space();
        Num acc = Num::zero(ctx_);
        Configuration c = sp.first();
        do {
            bool match = true;
            for (const auto& [i, s] : fixed) {
                if (c.spins.at(i) != s) {
                    match = false;
                    break;
                }
            }
            if (match) acc = acc + value(c);
        } while (sp.next(c));
        return acc;
    }

private:
    struct Edge {
        std::size_t parent, child;
        long exponent;
    };

    void require_total(const Configuration& c) const {
        if (c.spins.size() != vertices_.size()) {
            throw precondition_error("Configuration: not total on V_n");
        }
        for (auto s : c.spins) {
            if (s >= states_) throw precondition_error("Configuration: spin out of range");
        }
    }

    Num sum_weights() const {
        const ConfigurationSpace sp = space();
        Num acc = Num::zero(ctx_);
        Configuration c = sp.first();
        do {
            acc = acc + unnormalized_weight(c);
        } while (sp.next(c));
        return acc;
    }

    typename Num::Context ctx_;
    MeasureKind kind_;
    long exp_target_;
    unsigned states_;
    unsigned n_;
    Num base_;
    Num zero_;
    std::vector<TreeVertex> vertices_;
    std::vector<Num> lambda_;
    std::vector<Edge> edges_;
    std::vector<std::pair<std::size_t, std::vector<Num>>> boundary_; // W_n only
    Num z_ = Num::zero(ctx_);
    Num z_inv_ = Num::zero(ctx_);
};

/// Standalone Hamiltonian: H_n(sigma) = sum over edges of N_xy [sigma(x) = sigma(y)].
template <padic_number Num>
long long hamiltonian(const ModelSpec<Num>& spec, const Configuration& c, unsigned n) {
    const auto vertices = spec.tree.enumerate_volume(n);
    if (c.spins.size() != vertices.size()) {
        throw precondition_error("hamiltonian: configuration not total on V_n");
    }
    std::map<TreeVertex, std::size_t> index;
    for (std::size_t i = 0; i < vertices.size(); ++i) index.emplace(vertices[i], i);
    long long h = 0;
    for (const auto& [x, y] : spec.tree.enumerate_edges(n)) {
        if (c.spins[index.at(x)] == c.spins[index.at(y)]) {
            h += spec.coupling.exponent_for_edge(x, y);
        }
    }
    return h;
}

/// Z_n for a hat-form field (expanded and denormalized internally).
template <padic_number Num>
Num partition_function(const ModelSpec<Num>& spec, const BoundaryField<Num>& field, unsigned n,
                       std::size_t budget = 2'000'000) {
    const RawField<Num> raw = denormalize_field(spec, field, n);
    return FiniteVolumeMeasure<Num>(spec, raw, n, budget).partition_function();
}

// ---------------------------------------------------------------------------
// Compatibility
// ---------------------------------------------------------------------------

struct ResidualStats {
    std::size_t checked = 0;
    std::size_t nonzero = 0;
    bool has_finite = false;
    long min_finite = 0;  // worst (largest-norm) finite residual valuation
    bool has_bound = false;
    long min_bound = 0;

    void record(const Valuation& v) {
        ++checked;
        if (v.is_infinite()) return;
        ++nonzero;
        if (v.is_finite()) {
            if (!has_finite || v.value() < min_finite) min_finite = v.value();
            has_finite = true;
        } else {
            if (!has_bound || v.lower_bound() < min_bound) min_bound = v.lower_bound();
            has_bound = true;
        }
    }

    bool all_exact_zero() const { return nonzero == 0; }

    /// Every residual norm is guaranteed <= p^{-t}.
    bool all_at_most(long t) const {
        if (has_finite && min_finite < t) return false;
        if (has_bound && min_bound < t) return false;
        return true;
    }

    std::string worst_to_string() const {
        if (all_exact_zero()) return "0";
        long w = has_finite ? min_finite : min_bound;
        if (has_finite && has_bound && min_bound < min_finite) w = min_bound;
        return (has_finite ? std::string() : std::string(">=")) + std::to_string(w);
    }
};

struct CompatibilityReport {
    unsigned n = 0;
    std::size_t marginals = 0;
    ResidualStats residuals;
};

/// Exhaustively verify that summing the depth-n measure over the outer shell
/// reproduces the depth-(n-1) measure, marginal by marginal. For n = 1 the
/// root marginal of the depth-1 measure is checked against the one-level
/// recursion applied at the root.
template <padic_number Num>
CompatibilityReport check_compatibility(const ModelSpec<Num>& spec, const BoundaryField<Num>& field,
                                        unsigned n, std::size_t budget = 2'000'000) {
    if (n < 1) throw precondition_error("check_compatibility: n >= 1 required");
    const BoundaryField<Num> hat = expand_field(spec, field, std::max(n, 1u));
    const RawField<Num> raw = denormalize_field(spec, hat, n);

    CompatibilityReport report;
    report.n = n;

    const FiniteVolumeMeasure<Num> mu_n(spec, raw, n, budget);

    if (n == 1) {
        // root marginal pi(i) against the recursion evaluated at the root:
        // pi(i)/pi(0) must equal (lambda(i)/lambda(0)) prod_y F_i(hat h_y; theta)
        const unsigned q = spec.q_trunc();
        const auto sp = mu_n.space();
        std::vector<Num> marginal(spec.spin_states(), Num::zero(spec.ctx));
        Configuration c = sp.first();
        do {
            marginal[c.spins[0]] = marginal[c.spins[0]] + mu_n.value(c);
        } while (sp.next(c));

        C0Vector<Num> acc(spec.ctx, q);
        for (unsigned i = 1; i <= q; ++i) acc.set(i, spec.weights.lambda(i));
        for (const auto& y : spec.tree.successors(TreeVertex::root())) {
            const Num theta = spec.coupling.theta_for_edge(TreeVertex::root(), y);
            const C0Vector<Num> f = f_map(hat.at(y), theta);
            for (unsigned i = 1; i <= q; ++i) acc.set(i, acc[i] * f[i]);
        }
        if (marginal[0].is_zero_like()) {
            throw precondition_error("check_compatibility: root marginal of spin 0 vanishes");
        }
        const Num pi0_inv = marginal[0].inv();
        report.marginals = spec.spin_states();
        for (unsigned i = 1; i <= q; ++i) {
            const Num residual = marginal[i] * pi0_inv - acc[i];
            report.residuals.record(residual.valuation());
        }
        return report;
    }

    const FiniteVolumeMeasure<Num> mu_prev(spec, raw, n - 1, budget);
    const std::size_t inner_sites = mu_n.site_count() - mu_prev.site_count();
    const ConfigurationSpace outer(mu_prev.site_count(), spec.spin_states());
    const ConfigurationSpace shell(inner_sites, spec.spin_states());

    Configuration sigma = outer.first();
    do {
        Num lhs = Num::zero(spec.ctx);
        Configuration omega = shell.first();
        do {
            Configuration joined{sigma.spins};
            joined.spins.insert(joined.spins.end(), omega.spins.begin(), omega.spins.end());
            lhs = lhs + mu_n.value(joined);
        } while (shell.next(omega));
        const Num rhs = mu_prev.value(sigma);
        report.residuals.record((lhs - rhs).valuation());
        ++report.marginals;
    } while (outer.next(sigma));

    return report;
}

// ---------------------------------------------------------------------------
// q-state reduction
// ---------------------------------------------------------------------------

struct ReductionReport {
    bool weights_vanish = false;       // lambda(i) = 0 for all i >= q held
    std::size_t null_configs = 0;      // configurations touching spins >= q
    std::size_t null_config_failures = 0;
    std::size_t field_components_checked = 0;
    std::size_t field_nonzero_tail = 0; // hat h_{i,x} != 0 for some i >= q
    std::size_t values_compared = 0;
    ResidualStats native_mismatch;      // embedded vs native measure values

    bool ok() const {
        return weights_vanish && null_config_failures == 0 && field_nonzero_tail == 0 &&
               native_mismatch.all_exact_zero();
    }
};

/// Finite-state reduction: an embedded model whose weights vanish from
/// spin q on must (i) give zero mass to every configuration touching a spin
/// >= q, (ii) carry a field whose components i >= q vanish, and (iii) agree
/// exactly with the native q-state model on the common configurations.
template <padic_number Num>
ReductionReport q_state_reduction_check(const ModelSpec<Num>& spec, const BoundaryField<Num>& field,
                                        unsigned q, unsigned n, std::size_t budget = 2'000'000) {
    if (q < 1 || q > spec.spin_states()) {
        throw precondition_error("q_state_reduction_check: q out of range");
    }
    ReductionReport report;
    report.weights_vanish = true;
    for (unsigned i = q; i <= spec.q_trunc(); ++i) {
        if (!spec.weights.lambda(i).is_exact_zero()) report.weights_vanish = false;
    }
    if (!report.weights_vanish) {
        throw precondition_error("q_state_reduction_check: weights must vanish from spin q on");
    }

    const BoundaryField<Num> hat = expand_field(spec, field, n);
    const RawField<Num> raw = denormalize_field(spec, hat, n);
    const FiniteVolumeMeasure<Num> embedded(spec, raw, n, budget);

    // (ii) field tail components vanish
    for (unsigned level = 1; level <= n; ++level) {
        for (const auto& x : spec.tree.enumerate_level(level)) {
            const C0Vector<Num>& v = hat.at(x);
            for (unsigned i = q; i <= spec.q_trunc(); ++i) {
                ++report.field_components_checked;
                if (!v[i].is_exact_zero()) ++report.field_nonzero_tail;
            }
        }
    }

    // native q-state model: truncation q-1, weights and field restricted
    std::vector<Num> native_tail;
    for (unsigned i = 1; i < q; ++i) native_tail.push_back(spec.weights.lambda(i));
    const ModelSpec<Num> native{spec.ctx,
                                spec.tree,
                                spec.coupling,
                                WeightSequence<Num>(spec.ctx, native_tail),
                                spec.kind,
                                spec.exp_target_valuation};
    std::map<TreeVertex, C0Vector<Num>> native_values;
    for (unsigned level = 1; level <= n; ++level) {
        for (const auto& x : spec.tree.enumerate_level(level)) {
            const C0Vector<Num>& v = hat.at(x);
            C0Vector<Num> nv(spec.ctx, q - 1);
            for (unsigned i = 1; i < q; ++i) nv.set(i, v[i]);
            native_values.emplace(x, std::move(nv));
        }
    }
    const BoundaryField<Num> native_field =
        BoundaryField<Num>::explicit_field(n, std::move(native_values));
    const RawField<Num> native_raw = denormalize_field(native, native_field, n);
    const FiniteVolumeMeasure<Num> native_mu(native, native_raw, n, budget);

    // (i) + (iii) by one sweep over the embedded configuration space
    const auto sp = embedded.space();
    Configuration c = sp.first();
    do {
        if (c.touches_spin_at_least(q)) {
            ++report.null_configs;
            if (!embedded.value(c).is_exact_zero()) ++report.null_config_failures;
        } else {
            ++report.values_compared;
            const Num diff = embedded.value(c) - native_mu.value(c);
            report.native_mismatch.record(diff.valuation());
        }
    } while (sp.next(c));

    return report;
}

// ---------------------------------------------------------------------------
// Boundedness scan
// ---------------------------------------------------------------------------

struct ScanRow {
    unsigned n;
    bool has_norm = false;
    long max_norm_exponent = 0; // max |mu(sigma)|_p = p^{-exponent}
};

/// Finite-volume proxy for (un)boundedness: the largest measure norm per
/// depth. Exploratory output only; nothing is decided here.
template <padic_number Num>
std::vector<ScanRow> boundedness_scan(const ModelSpec<Num>& spec, const BoundaryField<Num>& field,
                                      unsigned n_max, std::size_t budget = 2'000'000) {
    std::vector<ScanRow> rows;
    const BoundaryField<Num> hat = expand_field(spec, field, n_max);
    for (unsigned n = 1; n <= n_max; ++n) {
        const RawField<Num> raw = denormalize_field(spec, hat, n);
        const FiniteVolumeMeasure<Num> mu(spec, raw, n, budget);
        ScanRow row{n, false, 0};
        const auto sp = mu.space();
        Configuration c = sp.first();
        do {
            const Valuation v = mu.value(c).valuation();
            if (v.is_finite() && (!row.has_norm || v.value() < row.max_norm_exponent)) {
                row.max_norm_exponent = v.value();
                row.has_norm = true;
            }
        } while (sp.next(c));
        rows.push_back(row);
    }
    return rows;
}

} // namespace qgibbs
