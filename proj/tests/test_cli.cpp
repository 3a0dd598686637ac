#include <qgibbs/config.hpp>
#include <qgibbs/literals.hpp>

#include <gtest/gtest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string preset(const std::string& name) {
    return std::string(QGIBBS_PRESET_DIR) + "/" + name;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(QGIBBS_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("qgibbs_cli_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST(Cli, BundledPresetPasses) {
    const fs::path out = fresh_dir("preset");
    EXPECT_EQ(run_cli("run " + preset("homogeneous-p5-k2-q2.json") + " --output-dir " +
                      out.string()),
              0);
    EXPECT_TRUE(fs::exists(out / "report.json"));
    EXPECT_TRUE(fs::exists(out / "norms.csv"));

    // every documented flag parses
    EXPECT_EQ(run_cli("run " + preset("homogeneous-p5-k2-q2.json") +
                      " --budget 1000000 --seed 2 --precision-digits 40"
                      " --allow-small-prime --allow-delta-one --output-dir " +
                      out.string()),
              0);
}

TEST(Cli, DeltaOneRejectedWithoutOverride) {
    const fs::path out = fresh_dir("delta1");
    EXPECT_EQ(run_cli("run " + preset("delta-one.json") + " --output-dir " + out.string()), 3);
    // with the override the run must terminate, converged or not
    const int code =
        run_cli("run " + preset("delta-one.json") + " --allow-delta-one --output-dir " +
                out.string());
    EXPECT_TRUE(code == 0 || code == 4) << "exit " << code;
}

TEST(Cli, InjectedFaultFails) {
    const fs::path out = fresh_dir("fault");
    EXPECT_EQ(run_cli("run " + preset("fault-injected.json") + " --output-dir " + out.string()),
              4);
}

TEST(Cli, ValidateDiagnosesSmallPrime) {
    const fs::path dir = fresh_dir("validate");
    const fs::path cfg = dir / "p3.json";
    {
        nlohmann::json j;
        std::ifstream in(preset("homogeneous-p5-k2-q2.json"));
        in >> j;
        j["model"]["prime"] = 3;
        j["model"]["weights"] = {"3"}; // keep delta = 1/p under the new prime
        std::ofstream out(cfg);
        out << j.dump(2);
    }
    EXPECT_EQ(run_cli("validate " + cfg.string()), 3);
    EXPECT_EQ(run_cli("validate " + cfg.string() + " --allow-small-prime"), 0);
    EXPECT_EQ(run_cli("validate " + preset("homogeneous-p5-k2-q2.json")), 0);
}

TEST(Cli, BudgetExceededExitCode) {
    const fs::path out = fresh_dir("budget");
    EXPECT_EQ(run_cli("run " + preset("homogeneous-p5-k2-q2.json") + " --budget 10 --output-dir " +
                      out.string()),
              5);
}

TEST(Cli, MissingConfigIsConfigError) {
    EXPECT_EQ(run_cli("run /nonexistent/config.json"), 2);
}

TEST(Cli, EnvOutputDirHonored) {
    const fs::path out = fresh_dir("envdir");
    const std::string cmd = "QGIBBS_OUTPUT_DIR=" + out.string() + " " + QGIBBS_CLI_PATH +
                            " run " + preset("homogeneous-theta1.json") + " > /dev/null 2>&1";
    EXPECT_EQ(WEXITSTATUS(std::system(cmd.c_str())), 0);
    EXPECT_TRUE(fs::exists(out / "report.json"));
}

TEST(Cli, ReportLiteralsParseBack) {
    const fs::path out = fresh_dir("roundtrip");
    ASSERT_EQ(run_cli("run " + preset("periodic-m2.json") + " --output-dir " + out.string()), 0);
    nlohmann::json report;
    std::ifstream in(out / "report.json");
    in >> report;
    const qgibbs::RationalContext rc{qgibbs::Prime::checked(5)};
    std::size_t parsed = 0;
    for (const auto& t : report.at("tasks")) {
        if (t.at("task") != "solve") continue;
        for (const auto& cls : t.at("field").at("by_class")) {
            for (const auto& lit : cls) {
                EXPECT_NO_THROW(qgibbs::parse_literal(lit.get<std::string>(), rc));
                ++parsed;
            }
        }
    }
    EXPECT_GT(parsed, 0u);
}
