#pragma once

#include <qgibbs/errors.hpp>
#include <qgibbs/literals.hpp>
#include <qgibbs/model.hpp>
#include <qgibbs/tree.hpp>

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qgibbs {

/// Validation finding. exit_class matches the runner's exit-code contract:
/// 2 for malformed configuration, 3 for violated model preconditions.
struct Diagnostic {
    enum class Severity { error, warning };
    Severity severity;
    int exit_class; // 2 = config error, 3 = precondition violation, 0 = advisory
    std::string code;
    std::string message;
};

struct TreeConfig {
    unsigned order = 2;
    unsigned depth = 2;
    RootDegreeMode mode = RootDegreeMode::k_successors;
};

struct CouplingConfig {
    enum class Mode { homogeneous, periodic, per_edge };
    Mode mode = Mode::homogeneous;
    std::string parameter = "p"; // p-adic literal; "p" means the prime itself
    long exponent = 0;
    unsigned m = 2;
    std::vector<long> exponents_by_class;
    std::map<std::string, long> by_child; // vertex text -> N of its parent edge
};

struct FieldConfig {
    enum class Form { hat, raw };
    Form form = Form::hat;
    unsigned depth = 1;
    std::map<std::string, std::vector<std::string>> vectors; // vertex -> literals
};

struct SolverConfig {
    enum class Start { weights, random };
    Start start = Start::weights;
    std::uint64_t seed = 1;
    long target_valuation = 24;
    long truncation_guard = 8;
    std::size_t max_iterations = 256;
    bool allow_delta_one = false;
};

struct ChecksConfig {
    std::size_t budget = 2'000'000;
    std::vector<unsigned> compatibility_levels;
    unsigned scan_n_max = 2;
    unsigned reduction_q = 2;
    unsigned expand_depth = 0; // 0 = tree depth
};

struct OutputConfig {
    std::string dir = "out";
    std::string report_name = "report.json";
    std::string csv_name = "norms.csv";
};

enum class Backend { exact, fixed };

struct ExperimentConfig {
    unsigned long prime = 5;
    bool allow_small_prime = false;
    Backend backend = Backend::exact;
    unsigned precision_digits = 32;
    TreeConfig tree;
    CouplingConfig coupling;
    std::vector<std::string> weights; // lambda(1..q_trunc) literals
    std::string measure_kind = "quasi-gibbs";
    std::optional<FieldConfig> field;
    std::vector<std::string> pipeline;
    SolverConfig solver;
    ChecksConfig checks;
    OutputConfig output;

    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load(const std::string& path);

    std::vector<Diagnostic> validate() const;
    nlohmann::json echo() const;

    unsigned q_trunc() const { return static_cast<unsigned>(weights.size()); }
    std::string parameter_literal() const {
        return coupling.parameter == "p" ? std::to_string(prime) : coupling.parameter;
    }
    std::vector<long> couplings_all() const {
        switch (coupling.mode) {
            case CouplingConfig::Mode::homogeneous: return {coupling.exponent};
            case CouplingConfig::Mode::periodic: return coupling.exponents_by_class;
            case CouplingConfig::Mode::per_edge: {
                std::vector<long> out;
                for (const auto& [k, v] : coupling.by_child) out.push_back(v);
                return out;
            }
        }
        return {};
    }
};

// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
T get_or(const nlohmann::json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw config_error("config: bad value for '" + key + "': " + e.what());
    }
}

inline const nlohmann::json& require(const nlohmann::json& j, const std::string& key) {
    if (!j.contains(key)) throw config_error("config: missing required key '" + key + "'");
    return j.at(key);
}

} // namespace detail

inline ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    using detail::get_or;
    using detail::require;
    ExperimentConfig cfg;

    const auto& model = require(j, "model");
    cfg.prime = require(model, "prime").get<unsigned long>();
    cfg.allow_small_prime = get_or(model, "allow_small_prime", false);
    const std::string backend = get_or<std::string>(model, "backend", "exact");
    if (backend == "exact") {
        cfg.backend = Backend::exact;
    } else if (backend == "fixed") {
        cfg.backend = Backend::fixed;
    } else {
        throw config_error("config: backend must be 'exact' or 'fixed'");
    }
    cfg.precision_digits = get_or<unsigned>(model, "precision_digits", 32);

    const auto& tree = require(model, "tree");
    cfg.tree.order = require(tree, "order").get<unsigned>();
    cfg.tree.depth = require(tree, "depth").get<unsigned>();
    const std::string rd = get_or<std::string>(tree, "root_degree", "k");
    if (rd == "k") {
        cfg.tree.mode = RootDegreeMode::k_successors;
    } else if (rd == "k+1") {
        cfg.tree.mode = RootDegreeMode::k_plus_one;
    } else {
        throw config_error("config: tree.root_degree must be 'k' or 'k+1'");
    }

    const auto& coup = require(model, "coupling");
    cfg.coupling.parameter = get_or<std::string>(coup, "parameter", "p");
    const std::string mode = require(coup, "mode").get<std::string>();
    if (mode == "homogeneous") {
        cfg.coupling.mode = CouplingConfig::Mode::homogeneous;
        cfg.coupling.exponent = require(coup, "N").get<long>();
    } else if (mode == "periodic") {
        cfg.coupling.mode = CouplingConfig::Mode::periodic;
        cfg.coupling.exponents_by_class =
            require(coup, "N_by_class").get<std::vector<long>>();
        cfg.coupling.m = get_or<unsigned>(
            coup, "m", static_cast<unsigned>(cfg.coupling.exponents_by_class.size()));
    } else if (mode == "per-edge") {
        cfg.coupling.mode = CouplingConfig::Mode::per_edge;
        for (const auto& [k, v] : require(coup, "by_child").items()) {
            cfg.coupling.by_child.emplace(k, v.get<long>());
        }
    } else {
        throw config_error("config: coupling.mode must be homogeneous, periodic or per-edge");
    }

    cfg.weights = require(model, "weights").get<std::vector<std::string>>();
    cfg.measure_kind = get_or<std::string>(model, "measure_kind", "quasi-gibbs");
    if (cfg.measure_kind != "quasi-gibbs" && cfg.measure_kind != "gibbs") {
        throw config_error("config: measure_kind must be 'quasi-gibbs' or 'gibbs'");
    }

    if (j.contains("field")) {
        const auto& f = j.at("field");
        FieldConfig fc;
        const std::string form = get_or<std::string>(f, "form", "hat");
        if (form == "hat") {
            fc.form = FieldConfig::Form::hat;
        } else if (form == "raw") {
            fc.form = FieldConfig::Form::raw;
        } else {
            throw config_error("config: field.form must be 'hat' or 'raw'");
        }
        fc.depth = require(f, "depth").get<unsigned>();
        for (const auto& [k, v] : require(f, "vectors").items()) {
            fc.vectors.emplace(k, v.get<std::vector<std::string>>());
        }
        cfg.field = std::move(fc);
    }

    cfg.pipeline = get_or<std::vector<std::string>>(j, "pipeline", {});

    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        const std::string start = get_or<std::string>(s, "start", "weights");
        if (start == "weights") {
            cfg.solver.start = SolverConfig::Start::weights;
        } else if (start == "random") {
            cfg.solver.start = SolverConfig::Start::random;
        } else {
            throw config_error("config: solver.start must be 'weights' or 'random'");
        }
        cfg.solver.seed = get_or<std::uint64_t>(s, "seed", 1);
        cfg.solver.target_valuation = get_or<long>(s, "target_valuation", 24);
        cfg.solver.truncation_guard = get_or<long>(s, "truncation_guard", 8);
        cfg.solver.max_iterations = get_or<std::size_t>(s, "max_iterations", 256);
        cfg.solver.allow_delta_one = get_or(s, "allow_delta_one", false);
    }

    if (j.contains("checks")) {
        const auto& c = j.at("checks");
        cfg.checks.budget = get_or<std::size_t>(c, "budget", 2'000'000);
        cfg.checks.compatibility_levels =
            get_or<std::vector<unsigned>>(c, "compatibility_levels", {});
        cfg.checks.scan_n_max = get_or<unsigned>(c, "scan_n_max", 2);
        cfg.checks.reduction_q = get_or<unsigned>(c, "reduction_q", 2);
        cfg.checks.expand_depth = get_or<unsigned>(c, "expand_depth", 0);
    }

    if (j.contains("output")) {
        const auto& o = j.at("output");
        cfg.output.dir = get_or<std::string>(o, "dir", "out");
        cfg.output.report_name = get_or<std::string>(o, "report", "report.json");
        cfg.output.csv_name = get_or<std::string>(o, "csv", "norms.csv");
    }

    return cfg;
}

inline ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("config: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw config_error("config: JSON parse failure in '" + path + "': " + e.what());
    }
    return from_json(j);
}

inline std::vector<Diagnostic> ExperimentConfig::validate() const {
    std::vector<Diagnostic> out;
    const auto error2 = [&](std::string code, std::string msg) {
        out.push_back({Diagnostic::Severity::error, 2, std::move(code), std::move(msg)});
    };
    const auto error3 = [&](std::string code, std::string msg) {
        out.push_back({Diagnostic::Severity::error, 3, std::move(code), std::move(msg)});
    };
    const auto warn = [&](std::string code, std::string msg) {
        out.push_back({Diagnostic::Severity::warning, 0, std::move(code), std::move(msg)});
    };

    // prime and backend
    std::optional<Prime> p;
    try {
        p = Prime::checked(prime, allow_small_prime);
    } catch (const precondition_error& e) {
        if (allow_small_prime) {
            error2("prime.invalid", e.what());
        } else {
            error3("prime.small",
                   std::string(e.what()) +
                       " (the model assumes a fixed prime greater than 3; "
                       "set allow_small_prime to probe smaller ones)");
        }
    }
    if (backend == Backend::fixed && precision_digits < 4) {
        error2("precision.tiny", "precision_digits must be at least 4");
    }

    if (tree.order < 1) error2("tree.order", "tree order must be >= 1");
    if (tree.depth < 1) error2("tree.depth", "tree depth must be >= 1");

    // parse model quantities against the exact backend for validation
    std::optional<RationalContext> rc;
    if (p) rc = RationalContext{*p};

    std::optional<PAdicRational> param;
    if (rc) {
        try {
            param = parse_literal(parameter_literal(), *rc);
            if (param->is_exact_zero()) {
                error3("coupling.parameter", "coupling parameter must be nonzero");
            } else if (!param->valuation().norm_at_most(0)) {
                error3("coupling.parameter",
                       "coupling parameter must satisfy |par|_p <= 1 (valuation " +
                           param->valuation().to_string() + ")");
            }
        } catch (const config_error& e) {
            error2("coupling.parameter", e.what());
        }
    }

    if (coupling.mode == CouplingConfig::Mode::periodic) {
        if (coupling.exponents_by_class.size() != coupling.m || coupling.m < 1) {
            error2("coupling.periodic", "N_by_class must list exactly m exponents");
        }
    }

    // weights and the contraction bound
    bool weights_ok = true;
    std::optional<Valuation> delta;
    if (rc) {
        std::vector<PAdicRational> tail;
        for (const auto& w : weights) {
            try {
                tail.push_back(parse_literal(w, *rc));
            } catch (const config_error& e) {
                error2("weights.literal", e.what());
                weights_ok = false;
            }
        }
        if (weights_ok) {
            Valuation d = Valuation::infinite();
            for (const auto& l : tail) d = min_exact(d, l.valuation());
            delta = d;
        }
    }

    const bool solving = std::find(pipeline.begin(), pipeline.end(), "solve") != pipeline.end();
    if (solving && delta) {
        if (!delta->norm_at_most(1)) {
            if (delta->norm_exactly(0)) {
                if (!solver.allow_delta_one) {
                    error3("weights.delta_one",
                           "delta = max|lambda(i)|_p = 1: the contraction bound fails and "
                           "uniqueness may break; rerun with allow_delta_one to probe");
                } else {
                    warn("weights.delta_one",
                         "delta = 1 override active: the solve may not converge and is "
                         "capped at max_iterations");
                }
            } else {
                error3("weights.delta", "solve requires delta = max|lambda(i)|_p <= 1/p");
            }
        }
        long max_exponent = 0;
        for (long n : couplings_all()) max_exponent = std::max(max_exponent, n);
        if (param && param->valuation().is_finite() && param->valuation().value() > 0 &&
            max_exponent > 0) {
            error3("coupling.sign",
                   "solve requires nonnegative coupling norms (exponents N <= 0 when "
                   "|parameter|_p < 1)");
        }
        if (coupling.mode == CouplingConfig::Mode::per_edge) {
            error3("coupling.per_edge", "solve supports homogeneous and periodic couplings only; "
                                        "per-edge fields must be built from a boundary");
        }
    }

    // gibbs kind preflight: the exp argument H + sum h must stay inside the
    // convergence disk
    if (measure_kind == "gibbs" && p) {
        bool exponents_divisible = true;
        for (long n : couplings_all()) {
            if (n % static_cast<long>(prime) != 0) exponents_divisible = false;
        }
        if (!exponents_divisible) {
            error3("gibbs.domain",
                   "gibbs kind: exp_p converges only on |x|_p < p^{-1/(p-1)}; couplings "
                   "not divisible by p can push H outside the disk");
        }
    }

    // pipeline task names and field dependencies
    bool have_field = field.has_value();
    for (const auto& task : pipeline) {
        if (task == "solve") {
            have_field = true;
            continue;
        }
        if (task != "verify-recurrence" && task != "check-compatibility" &&
            task != "reduction-check" && task != "boundedness-scan") {
            error2("pipeline.task", "unknown pipeline task '" + task + "'");
            continue;
        }
        if (!have_field) {
            error2("pipeline.field",
                   "task '" + task + "' needs a prior solve or an explicit field");
        }
    }

    if (field) {
        const unsigned arity = field->form == FieldConfig::Form::hat ? q_trunc() : q_trunc() + 1;
        for (const auto& [vx, lits] : field->vectors) {
            if (lits.size() != arity) {
                error2("field.arity", "field vector at " + vx + " must list " +
                                          std::to_string(arity) + " literals");
            }
        }
        if (field->depth > tree.depth) {
            error2("field.depth", "field depth exceeds the tree depth");
        }
    }

    if (checks.reduction_q < 1 || checks.reduction_q > q_trunc() + 1) {
        if (std::find(pipeline.begin(), pipeline.end(), "reduction-check") != pipeline.end()) {
            error2("checks.reduction_q", "reduction_q out of range");
        }
    }
    for (unsigned n : checks.compatibility_levels) {
        if (n > tree.depth) error2("checks.levels", "compatibility level exceeds tree depth");
    }
    if (checks.scan_n_max > tree.depth) {
        error2("checks.scan", "scan_n_max exceeds tree depth");
    }

    return out;
}

inline nlohmann::json ExperimentConfig::echo() const {
    nlohmann::json j;
    j["model"]["prime"] = prime;
    j["model"]["allow_small_prime"] = allow_small_prime;
    j["model"]["backend"] = backend == Backend::exact ? "exact" : "fixed";
    j["model"]["precision_digits"] = precision_digits;
    j["model"]["tree"]["order"] = tree.order;
    j["model"]["tree"]["depth"] = tree.depth;
    j["model"]["tree"]["root_degree"] = tree.mode == RootDegreeMode::k_successors ? "k" : "k+1";
    j["model"]["coupling"]["parameter"] = parameter_literal();
    switch (coupling.mode) {
        case CouplingConfig::Mode::homogeneous:
            j["model"]["coupling"]["mode"] = "homogeneous";
            j["model"]["coupling"]["N"] = coupling.exponent;
            break;
        case CouplingConfig::Mode::periodic:
            j["model"]["coupling"]["mode"] = "periodic";
            j["model"]["coupling"]["m"] = coupling.m;
            j["model"]["coupling"]["N_by_class"] = coupling.exponents_by_class;
            break;
        case CouplingConfig::Mode::per_edge: {
            j["model"]["coupling"]["mode"] = "per-edge";
            nlohmann::json edges;
            for (const auto& [k, v] : coupling.by_child) edges[k] = v;
            j["model"]["coupling"]["by_child"] = edges;
            break;
        }
    }
    j["model"]["weights"] = weights;
    j["model"]["measure_kind"] = measure_kind;
    if (field) {
        j["field"]["form"] = field->form == FieldConfig::Form::hat ? "hat" : "raw";
        j["field"]["depth"] = field->depth;
        nlohmann::json vecs;
        for (const auto& [k, v] : field->vectors) vecs[k] = v;
        j["field"]["vectors"] = vecs;
    }
    j["pipeline"] = pipeline;
    j["solver"]["start"] = solver.start == SolverConfig::Start::weights ? "weights" : "random";
    j["solver"]["seed"] = solver.seed;
    j["solver"]["target_valuation"] = solver.target_valuation;
    j["solver"]["truncation_guard"] = solver.truncation_guard;
    j["solver"]["max_iterations"] = solver.max_iterations;
    j["solver"]["allow_delta_one"] = solver.allow_delta_one;
    j["checks"]["budget"] = checks.budget;
    j["checks"]["compatibility_levels"] = checks.compatibility_levels;
    j["checks"]["scan_n_max"] = checks.scan_n_max;
    j["checks"]["reduction_q"] = checks.reduction_q;
    j["checks"]["expand_depth"] = checks.expand_depth;
    // output destinations are deliberately not echoed: identical experiments
    // produce byte-identical reports wherever they are written
    return j;
}

} // namespace qgibbs
