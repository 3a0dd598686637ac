#pragma once

#include <qgibbs/config.hpp>
#include <qgibbs/literals.hpp>
#include <qgibbs/measure.hpp>
#include <qgibbs/sampling.hpp>
#include <qgibbs/solver.hpp>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace qgibbs {

// Exit-code contract:  0 all verifications pass, 2 config error,
// 3 precondition violation, 4 verification failure, 5 budget exceeded.
namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int config = 2;
inline constexpr int precondition = 3;
inline constexpr int verification = 4;
inline constexpr int budget = 5;
} // namespace exit_code

struct RunOutcome {
    int code = exit_code::ok;
    nlohmann::json report;
    std::vector<std::pair<std::string, std::string>> files; // name -> content
    std::vector<std::string> summary;
};

namespace detail_run {

template <padic_number Num>
struct BuiltModel {
    ModelSpec<Num> spec;
    std::optional<BoundaryField<Num>> field;
};

template <padic_number Num>
typename Num::Context make_context(const ExperimentConfig& cfg, Prime p);

template <>
inline RationalContext make_context<PAdicRational>(const ExperimentConfig&, Prime p) {
    return RationalContext{p};
}
template <>
inline DigitsContext make_context<PAdicDigits>(const ExperimentConfig& cfg, Prime p) {
    return DigitsContext{p, cfg.precision_digits};
}

template <padic_number Num>
BuiltModel<Num> build_model(const ExperimentConfig& cfg) {
    const Prime p = Prime::checked(cfg.prime, cfg.allow_small_prime);
    const typename Num::Context ctx = make_context<Num>(cfg, p);

    std::vector<Num> tail;
    for (const auto& w : cfg.weights) tail.push_back(parse_literal(w, ctx));
    WeightSequence<Num> weights(ctx, std::move(tail));

    const Num param = parse_literal(cfg.parameter_literal(), ctx);
    typename CouplingAssignment<Num>::Mode mode = typename CouplingAssignment<Num>::Homogeneous{0};
    switch (cfg.coupling.mode) {
        case CouplingConfig::Mode::homogeneous:
            mode = typename CouplingAssignment<Num>::Homogeneous{cfg.coupling.exponent};
            break;
        case CouplingConfig::Mode::periodic:
            mode = typename CouplingAssignment<Num>::Periodic{cfg.coupling.m,
                                                              cfg.coupling.exponents_by_class};
            break;
        case CouplingConfig::Mode::per_edge: {
            typename CouplingAssignment<Num>::PerEdge pe;
            for (const auto& [vx, n] : cfg.coupling.by_child) {
                pe.by_child.emplace(TreeVertex::parse(vx), n);
            }
            mode = std::move(pe);
            break;
        }
    }
    CouplingAssignment<Num> coupling(param, std::move(mode));

    CayleyTree tree(cfg.tree.order, cfg.tree.depth, cfg.tree.mode);
    const MeasureKind kind =
        cfg.measure_kind == "gibbs" ? MeasureKind::gibbs : MeasureKind::quasi_gibbs;

    BuiltModel<Num> built{
        ModelSpec<Num>{ctx, tree, std::move(coupling), std::move(weights), kind,
                       static_cast<long>(cfg.precision_digits)},
        std::nullopt};

    if (cfg.field) {
        std::map<TreeVertex, C0Vector<Num>> vectors;
        const unsigned q = built.spec.q_trunc();
        for (const auto& [vx, lits] : cfg.field->vectors) {
            const TreeVertex v = TreeVertex::parse(vx);
            if (cfg.field->form == FieldConfig::Form::hat) {
                C0Vector<Num> c(ctx, q);
                for (unsigned i = 1; i <= q; ++i) c.set(i, parse_literal(lits.at(i - 1), ctx));
                vectors.emplace(v, std::move(c));
            }
        }
        if (cfg.field->form == FieldConfig::Form::raw) {
            RawField<Num> raw;
            raw.depth = cfg.field->depth;
            for (const auto& [vx, lits] : cfg.field->vectors) {
                std::vector<Num> h;
                for (const auto& lit : lits) h.push_back(parse_literal(lit, ctx));
                raw.values.emplace(TreeVertex::parse(vx), std::move(h));
            }
            built.field = normalize_field(raw, built.spec.weights);
        } else {
            built.field = BoundaryField<Num>::explicit_field(cfg.field->depth, std::move(vectors));
        }
    }
    return built;
}

inline nlohmann::json valuation_json(const Valuation& v) { return v.to_string(); }

template <padic_number Num>
nlohmann::json vector_json(const C0Vector<Num>& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (unsigned i = 1; i <= v.q_trunc(); ++i) arr.push_back(to_literal(v[i]));
    return arr;
}

template <padic_number Num>
nlohmann::json field_json(const BoundaryField<Num>& f) {
    nlohmann::json j;
    if (f.is_translation_invariant()) {
        j["kind"] = "translation-invariant";
        j["vector"] = vector_json(std::get<typename BoundaryField<Num>::TranslationInvariant>(f.rep()).value);
    } else if (f.is_periodic()) {
        const auto& pr = std::get<typename BoundaryField<Num>::Periodic>(f.rep());
        j["kind"] = "periodic";
        j["m"] = pr.m;
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& v : pr.by_class) arr.push_back(vector_json(v));
        j["by_class"] = arr;
    } else {
        const auto& ex = std::get<typename BoundaryField<Num>::Explicit>(f.rep());
        j["kind"] = "explicit";
        j["depth"] = ex.depth;
        nlohmann::json vecs;
        for (const auto& [x, v] : ex.values) vecs[x.to_string()] = vector_json(v);
        j["vectors"] = vecs;
    }
    return j;
}

template <padic_number Num>
nlohmann::json certificate_json(const ConvergenceCertificate<Num>& c) {
    nlohmann::json j;
    nlohmann::json starts = nlohmann::json::array();
    for (const auto& s : c.start) starts.push_back(vector_json(s));
    j["start"] = starts;
    j["delta_valuation"] = c.delta_bound.to_string();
    j["target_valuation"] = c.target_valuation;
    j["truncation"] = c.truncation;
    j["iterations"] = c.iterations;
    nlohmann::json deltas = nlohmann::json::array();
    for (const auto& d : c.steps.deltas) deltas.push_back(d.to_string());
    j["step_delta_valuations"] = deltas;
    j["ratio_exponents"] = c.steps.ratio_exponents;
    j["ratios_within_bound"] = c.steps.ratios_within_bound;
    j["target_reached_at"] = c.steps.target_reached_at;
    j["stationary"] = c.stationary;
    j["stationary_bound"] = c.stationary_bound.to_string();
    if (!c.diagnostics.empty()) j["diagnostics"] = c.diagnostics;
    return j;
}

inline nlohmann::json residuals_json(const ResidualStats& r) {
    nlohmann::json j;
    j["checked"] = r.checked;
    j["nonzero"] = r.nonzero;
    j["all_exact_zero"] = r.all_exact_zero();
    j["worst"] = r.worst_to_string();
    return j;
}

/// Pass rule for residual-style checks: exact zeros on the exact backend,
/// certified below the target valuation on the fixed-precision backend.
inline bool residuals_pass(const ResidualStats& r, Backend backend, long target) {
    if (backend == Backend::exact) return r.all_exact_zero();
    return r.all_at_most(target);
}

template <padic_number Num>
const BoundaryField<Num>& require_field(const BuiltModel<Num>& built) {
    if (!built.field) {
        throw precondition_error("pipeline: task needs a prior solve or an explicit field");
    }
    return *built.field;
}

template <padic_number Num>
RunOutcome run_pipeline(const ExperimentConfig& cfg) {
    RunOutcome out;
    out.report["config"] = cfg.echo();
    nlohmann::json tasks = nlohmann::json::array();

    BuiltModel<Num> built = build_model<Num>(cfg);
    ModelSpec<Num>& spec = built.spec;
    const long target = cfg.solver.target_valuation;
    const unsigned expand_depth =
        cfg.checks.expand_depth ? cfg.checks.expand_depth : cfg.tree.depth;

    bool all_pass = true;
    bool budget_hit = false;

    for (const auto& task : cfg.pipeline) {
        nlohmann::json tj;
        tj["task"] = task;
        try {
            if (task == "solve") {
                SolveOptions<Num> opts;
                opts.target_valuation = cfg.solver.target_valuation;
                opts.truncation_guard = cfg.solver.truncation_guard;
                opts.max_iterations = cfg.solver.max_iterations;
                opts.allow_delta_one = cfg.solver.allow_delta_one;
                if (cfg.solver.start == SolverConfig::Start::random) {
                    Sampler sampler(cfg.solver.seed);
                    const Valuation d = spec.weights.delta_valuation();
                    const long dexp = d.is_finite() ? d.value() : 1;
                    std::vector<C0Vector<Num>> starts;
                    for (unsigned c = 0; c < spec.coupling.period(); ++c) {
                        starts.push_back(
                            sampler.vector_in_ball<Num>(spec.ctx, spec.q_trunc(), dexp));
                    }
                    opts.start = std::move(starts);
                }
                SolveResult<Num> res = solve_fixed_point(spec, opts);
                tj["certificate"] = certificate_json(res.certificate);
                tj["field"] = field_json(res.field);
                const bool ok = res.ok();
                tj["status"] = ok ? "converged"
                                  : (res.status == SolveStatus::non_contraction
                                         ? "non-contraction"
                                         : "no-convergence");
                tj["pass"] = ok;
                if (ok) {
                    built.field = std::move(res.field);
                } else {
                    all_pass = false;
                }
            } else if (task == "verify-recurrence") {
                const BoundaryField<Num> ex =
                    expand_field(spec, require_field(built), expand_depth);
                const RecurrenceReport<Num> rep = verify_recurrence(spec, ex, expand_depth);
                nlohmann::json levels = nlohmann::json::array();
                ResidualStats stats;
                for (const auto& l : rep.levels) {
                    nlohmann::json lj;
                    lj["level"] = l.level;
                    lj["exact_zero"] = l.exact_zero;
                    if (!l.exact_zero) {
                        lj["worst_bound"] = l.worst_bound;
                    }
                    levels.push_back(lj);
                }
                for (const auto& v : rep.violations) stats.record(v.residual);
                tj["levels"] = levels;
                tj["violations"] = rep.violations.size();
                const bool pass = rep.all_exact_zero() ||
                                  (cfg.backend == Backend::fixed && rep.all_residuals_at_most(target));
                tj["pass"] = pass;
                if (!pass) all_pass = false;
            } else if (task == "check-compatibility") {
                std::vector<unsigned> levels = cfg.checks.compatibility_levels;
                if (levels.empty()) {
                    for (unsigned n = 2; n <= expand_depth; ++n) levels.push_back(n);
                }
                const BoundaryField<Num> ex =
                    expand_field(spec, require_field(built), expand_depth);
                nlohmann::json lj = nlohmann::json::array();
                bool pass = true;
                for (unsigned n : levels) {
                    const CompatibilityReport rep =
                        check_compatibility(spec, ex, n, cfg.checks.budget);
                    nlohmann::json nj;
                    nj["n"] = rep.n;
                    nj["marginals"] = rep.marginals;
                    nj["residuals"] = residuals_json(rep.residuals);
                    lj.push_back(nj);
                    pass = pass && residuals_pass(rep.residuals, cfg.backend, target);
                }
                tj["levels"] = lj;
                tj["pass"] = pass;
                if (!pass) all_pass = false;
            } else if (task == "reduction-check") {
                const BoundaryField<Num> ex =
                    expand_field(spec, require_field(built), expand_depth);
                const ReductionReport rep = q_state_reduction_check(
                    spec, ex, cfg.checks.reduction_q,
                    std::min(expand_depth, cfg.tree.depth), cfg.checks.budget);
                tj["null_configs"] = rep.null_configs;
                tj["null_failures"] = rep.null_config_failures;
                tj["field_tail_nonzero"] = rep.field_nonzero_tail;
                tj["values_compared"] = rep.values_compared;
                tj["native_mismatch"] = residuals_json(rep.native_mismatch);
                const bool pass =
                    rep.weights_vanish && rep.null_config_failures == 0 &&
                    rep.field_nonzero_tail == 0 &&
                    residuals_pass(rep.native_mismatch, cfg.backend, target);
                tj["pass"] = pass;
                if (!pass) all_pass = false;
            } else if (task == "boundedness-scan") {
                const std::vector<ScanRow> rows = boundedness_scan(
                    spec, require_field(built), cfg.checks.scan_n_max, cfg.checks.budget);
                nlohmann::json rj = nlohmann::json::array();
                std::ostringstream csv;
                csv << "n,max_norm\n";
                bool growing = rows.size() > 1;
                for (std::size_t i = 0; i < rows.size(); ++i) {
                    const auto& r = rows[i];
                    const std::string norm =
                        r.has_norm ? std::to_string(spec.prime()) + "^" +
                                         std::to_string(-r.max_norm_exponent)
                                   : "0";
                    nlohmann::json one;
                    one["n"] = r.n;
                    one["max_norm"] = norm;
                    rj.push_back(one);
                    csv << r.n << "," << norm << "\n";
                    if (i > 0 && !(rows[i].has_norm && rows[i - 1].has_norm &&
                                   rows[i].max_norm_exponent < rows[i - 1].max_norm_exponent)) {
                        growing = false;
                    }
                }
                tj["rows"] = rj;
                // advisory only: finite-volume profiles decide nothing
                tj["monotone_growth"] = growing;
                tj["pass"] = true; // exploratory output, never gates
                out.files.emplace_back(cfg.output.csv_name, csv.str());
            } else {
                throw config_error("unknown pipeline task '" + task + "'");
            }
        } catch (const budget_error& e) {
            tj["error"] = e.what();
            tj["pass"] = false;
            budget_hit = true;
            all_pass = false;
        }
        out.summary.push_back(task + ": " +
                              (tj.value("pass", false) ? "pass" : "FAIL"));
        tasks.push_back(tj);
    }

    out.report["tasks"] = tasks;
    out.code = budget_hit ? exit_code::budget
                          : (all_pass ? exit_code::ok : exit_code::verification);
    out.report["exit_code"] = out.code;
    out.report["verdict"] = all_pass ? "pass" : "fail";
    return out;
}

} // namespace detail_run

/// Execute the configured pipeline. Never throws: every failure is folded
/// into the exit code and report.
inline RunOutcome run_experiment(const ExperimentConfig& cfg) {
    RunOutcome out;
    const std::vector<Diagnostic> diags = cfg.validate();
    nlohmann::json dj = nlohmann::json::array();
    int worst = exit_code::ok;
    for (const auto& d : diags) {
        nlohmann::json one;
        one["severity"] = d.severity == Diagnostic::Severity::error ? "error" : "warning";
        one["code"] = d.code;
        one["message"] = d.message;
        dj.push_back(one);
        if (d.severity == Diagnostic::Severity::error) {
            worst = std::max(worst, d.exit_class);
        }
    }
    if (worst != exit_code::ok) {
        out.code = worst;
        out.report["config"] = cfg.echo();
        out.report["diagnostics"] = dj;
        out.report["exit_code"] = out.code;
        out.report["verdict"] = "rejected";
        out.summary.push_back("configuration rejected (see diagnostics)");
        for (const auto& d : diags) {
            if (d.severity == Diagnostic::Severity::error) {
                out.summary.push_back("  " + d.code + ": " + d.message);
            }
        }
        return out;
    }

    try {
        out = cfg.backend == Backend::exact ? detail_run::run_pipeline<PAdicRational>(cfg)
                                            : detail_run::run_pipeline<PAdicDigits>(cfg);
        if (!dj.empty()) out.report["diagnostics"] = dj;
    } catch (const budget_error& e) {
        out.code = exit_code::budget;
        out.report["error"] = e.what();
        out.summary.push_back(std::string("budget exceeded: ") + e.what());
    } catch (const precondition_error& e) {
        out.code = exit_code::precondition;
        out.report["error"] = e.what();
        out.summary.push_back(std::string("precondition violated: ") + e.what());
    } catch (const precision_error& e) {
        out.code = exit_code::verification;
        out.report["error"] = e.what();
        out.summary.push_back(std::string("precision exhausted: ") + e.what());
    } catch (const config_error& e) {
        out.code = exit_code::config;
        out.report["error"] = e.what();
        out.summary.push_back(std::string("config error: ") + e.what());
    }
    out.report["exit_code"] = out.code;
    return out;
}

/// Serialize the outcome under output_dir; identical outcomes produce
/// byte-identical files (sorted keys, canonical literals, no timestamps).
inline void write_outcome(const RunOutcome& out, const ExperimentConfig& cfg,
                          const std::string& output_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(output_dir);
    {
        std::ofstream f(fs::path(output_dir) / cfg.output.report_name);
        f << out.report.dump(2) << "\n";
    }
    for (const auto& [name, content] : out.files) {
        std::ofstream f(fs::path(output_dir) / name);
        f << content;
    }
}

} // namespace qgibbs
