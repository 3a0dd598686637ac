// qgibbs command line: batch experiment runner for p-adic quasi Gibbs
// measures on Cayley trees.
//
//   qgibbs run <config.json>       execute the configured pipeline
//   qgibbs validate <config.json>  schema and cross-field diagnostics
//
// Exit codes: 0 success, 2 config error, 3 precondition violation,
// 4 verification failure, 5 budget exceeded.

#include <qgibbs/qgibbs.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

namespace {

struct CliOverrides {
    std::optional<std::size_t> budget;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> precision_digits;
    bool allow_small_prime = false;
    bool allow_delta_one = false;
    std::optional<std::string> output_dir;
};

void apply(const CliOverrides& o, qgibbs::ExperimentConfig& cfg) {
    if (o.budget) cfg.checks.budget = *o.budget;
    if (o.seed) cfg.solver.seed = *o.seed;
    if (o.precision_digits) cfg.precision_digits = *o.precision_digits;
    if (o.allow_small_prime) cfg.allow_small_prime = true;
    if (o.allow_delta_one) cfg.solver.allow_delta_one = true;
    if (o.output_dir) {
        cfg.output.dir = *o.output_dir;
    } else if (const char* env = std::getenv("QGIBBS_OUTPUT_DIR")) {
        cfg.output.dir = env;
    }
}

int run_command(const std::string& path, const CliOverrides& o) {
    qgibbs::ExperimentConfig cfg;
    try {
        cfg = qgibbs::ExperimentConfig::load(path);
    } catch (const qgibbs::config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return qgibbs::exit_code::config;
    }
    apply(o, cfg);

    const qgibbs::RunOutcome out = qgibbs::run_experiment(cfg);
    qgibbs::write_outcome(out, cfg, cfg.output.dir);
    for (const auto& line : out.summary) std::cout << line << "\n";
    std::cout << (out.code == 0 ? "OK" : "FAILED (exit " + std::to_string(out.code) + ")")
              << "; report written to " << cfg.output.dir << "/" << cfg.output.report_name
              << "\n";
    return out.code;
}

int validate_command(const std::string& path, const CliOverrides& o) {
    qgibbs::ExperimentConfig cfg;
    try {
        cfg = qgibbs::ExperimentConfig::load(path);
    } catch (const qgibbs::config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return qgibbs::exit_code::config;
    }
    apply(o, cfg);

    const auto diags = cfg.validate();
    int worst = qgibbs::exit_code::ok;
    for (const auto& d : diags) {
        const bool err = d.severity == qgibbs::Diagnostic::Severity::error;
        std::cout << (err ? "error" : "warning") << " [" << d.code << "] " << d.message << "\n";
        if (err) worst = std::max(worst, d.exit_class);
    }
    if (diags.empty()) std::cout << "configuration is valid\n";
    return worst;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"p-adic quasi Gibbs measures on Cayley trees"};
    app.require_subcommand(1);

    CliOverrides overrides;
    std::string config_path;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("config", config_path, "experiment configuration (JSON)")->required();
        cmd->add_option("--budget", overrides.budget, "configuration enumeration budget");
        cmd->add_option("--seed", overrides.seed, "seed for random solver starts");
        cmd->add_option("--precision-digits", overrides.precision_digits,
                        "digits carried by the fixed-precision backend");
        cmd->add_flag("--allow-small-prime", overrides.allow_small_prime,
                      "admit p in {2,3} for exploratory runs");
        cmd->add_flag("--allow-delta-one", overrides.allow_delta_one,
                      "run the solver even when delta = 1 (capped, may not converge)");
        cmd->add_option("--output-dir", overrides.output_dir,
                        "report directory (default: config value or QGIBBS_OUTPUT_DIR)");
    };

    CLI::App* run = app.add_subcommand("run", "execute the configured pipeline");
    add_common(run);
    CLI::App* validate = app.add_subcommand("validate", "check a configuration");
    add_common(validate);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return run_command(config_path, overrides);
        if (validate->parsed()) return validate_command(config_path, overrides);
    } catch (const std::exception& e) {
        std::cerr << "fatal: " << e.what() << "\n";
        return qgibbs::exit_code::config;
    }
    return qgibbs::exit_code::config;
}
