// Subprocess tests of the command-line surface: determinism of generated
// bytes, reproducibility of reports, exit codes, and the shapes of emitted
// files. Skipped when the binary path is not injected via --cli-bin.

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>

#include <json.hpp>

#include "lpn/data_io.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd =
        "\"" + lpn_test::g_cli_bin + "\" " + args + " >" + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) { return lpn::read_file(p); }

class CliTest : public ::testing::Test {
  protected:
    void SetUp() override {
        if (lpn_test::g_cli_bin.empty()) {
            GTEST_SKIP() << "pass --cli-bin=<path> to enable CLI tests";
        }
    }
};

}  // namespace

TEST_F(CliTest, GenIsByteIdenticalForEqualSeeds) {
    lpn_test::TempDir dir("cli_gen");
    const auto log = dir.path() / "log.txt";
    ASSERT_EQ(run_cli("gen --scenes 4 --seed 11 --output " + (dir.path() / "a").string(), log), 0)
        << slurp(log);
    ASSERT_EQ(run_cli("gen --scenes 4 --seed 11 --output " + (dir.path() / "b").string(), log), 0);
    ASSERT_EQ(run_cli("gen --scenes 4 --seed 12 --output " + (dir.path() / "c").string(), log), 0);

    for (const char* name : {"manifest.json", "scene_0000.txt", "scene_0003.grid"}) {
        EXPECT_EQ(slurp(dir.path() / "a" / name), slurp(dir.path() / "b" / name)) << name;
    }
    EXPECT_NE(slurp(dir.path() / "a" / "scene_0000.grid"),
              slurp(dir.path() / "c" / "scene_0000.grid"));
}

TEST_F(CliTest, GenZeroScenesWritesEmptyManifest) {
    lpn_test::TempDir dir("cli_gen0");
    const auto log = dir.path() / "log.txt";
    ASSERT_EQ(run_cli("gen --scenes 0 --output " + (dir.path() / "out").string(), log), 0);
    const auto entries = lpn::read_manifest(dir.path() / "out" / "manifest.json");
    EXPECT_TRUE(entries.empty());
}

TEST_F(CliTest, GenManifestReferencesExactlyTheScenePairs) {
    lpn_test::TempDir dir("cli_genn");
    const auto log = dir.path() / "log.txt";
    ASSERT_EQ(run_cli("gen --scenes 7 --seed 5 --output " + (dir.path() / "out").string(), log), 0);
    const auto entries = lpn::read_manifest(dir.path() / "out" / "manifest.json");
    ASSERT_EQ(entries.size(), 7u);
    for (const auto& e : entries) {
        EXPECT_TRUE(fs::exists(dir.path() / "out" / e.annotation_path));
        EXPECT_TRUE(fs::exists(dir.path() / "out" / e.grid_path));
    }
    // Lot tags cycle round-robin over the default four lots.
    EXPECT_EQ(entries[0].lot_tag, "lot0");
    EXPECT_EQ(entries[4].lot_tag, "lot0");
    EXPECT_EQ(entries[5].lot_tag, "lot1");
}

TEST_F(CliTest, TrainIsReproducibleAndLossDecreases) {
    lpn_test::TempDir dir("cli_train");
    const auto log = dir.path() / "log.txt";
    lpn::write_file(dir.path() / "cfg.json", R"({"train": {"epochs": 60, "feature_grid": 4}})");
    ASSERT_EQ(run_cli("gen --scenes 4 --seed 3 --output " + (dir.path() / "scenes").string(), log),
              0);

    const std::string base = "train --config " + (dir.path() / "cfg.json").string() +
                             " --manifest " + (dir.path() / "scenes" / "manifest.json").string() +
                             " --seed 9 --no-timestamp --output ";
    ASSERT_EQ(run_cli(base + (dir.path() / "r1").string(), log), 0) << slurp(log);
    ASSERT_EQ(run_cli(base + (dir.path() / "r2").string(), log), 0);

    for (const char* name : {"model.json", "loss_history.csv", "train_report.json"}) {
        EXPECT_EQ(slurp(dir.path() / "r1" / name), slurp(dir.path() / "r2" / name)) << name;
    }

    // Final loss beats the initial loss on the default config.
    const auto report = nlohmann::json::parse(slurp(dir.path() / "r1" / "train_report.json"));
    EXPECT_LT(report.at("final_total").get<double>(), report.at("initial_total").get<double>());
    EXPECT_FALSE(report.contains("generated_at"));
    EXPECT_FALSE(report.contains("wall_clock_seconds"));
}

TEST_F(CliTest, KernelFlagSelectsObjective) {
    lpn_test::TempDir dir("cli_kernel");
    const auto log = dir.path() / "log.txt";
    lpn::write_file(dir.path() / "cfg.json", R"({"train": {"epochs": 20, "feature_grid": 4}})");
    ASSERT_EQ(run_cli("gen --scenes 3 --seed 8 --output " + (dir.path() / "scenes").string(), log),
              0);
    const std::string base = "train --config " + (dir.path() / "cfg.json").string() +
                             " --manifest " + (dir.path() / "scenes" / "manifest.json").string() +
                             " --seed 4 --no-timestamp ";
    ASSERT_EQ(run_cli(base + "--kernel on --output " + (dir.path() / "on").string(), log), 0);
    ASSERT_EQ(run_cli(base + "--kernel off --output " + (dir.path() / "off").string(), log), 0);

    const auto on = nlohmann::json::parse(slurp(dir.path() / "on" / "train_report.json"));
    const auto off = nlohmann::json::parse(slurp(dir.path() / "off" / "train_report.json"));
    EXPECT_EQ(on.at("kernel"), "on");
    EXPECT_EQ(off.at("kernel"), "off");
    EXPECT_NE(slurp(dir.path() / "on" / "model.json"), slurp(dir.path() / "off" / "model.json"));
}

TEST_F(CliTest, EvalReportsAreReproducibleAndComplete) {
    lpn_test::TempDir dir("cli_eval");
    const auto log = dir.path() / "log.txt";
    lpn::write_file(dir.path() / "cfg.json", R"({"train": {"epochs": 40, "feature_grid": 4}})");
    ASSERT_EQ(run_cli("gen --scenes 5 --seed 2 --output " + (dir.path() / "scenes").string(), log),
              0);
    ASSERT_EQ(run_cli("train --config " + (dir.path() / "cfg.json").string() + " --manifest " +
                          (dir.path() / "scenes" / "manifest.json").string() +
                          " --seed 1 --no-timestamp --output " + (dir.path() / "run").string(),
                      log),
              0);

    const std::string eval_base =
        " --model " + (dir.path() / "run" / "model.json").string() + " --manifest " +
        (dir.path() / "scenes" / "manifest.json").string() + " --no-timestamp --output ";
    ASSERT_EQ(run_cli("eval-proposals --budgets 10 50" + eval_base + (dir.path() / "e1").string(),
                      log),
              0)
        << slurp(log);
    ASSERT_EQ(run_cli("eval-proposals --budgets 10 50" + eval_base + (dir.path() / "e2").string(),
                      log),
              0);
    EXPECT_EQ(slurp(dir.path() / "e1" / "ar_table.csv"), slurp(dir.path() / "e2" / "ar_table.csv"));
    EXPECT_EQ(slurp(dir.path() / "e1" / "ar_table.json"),
              slurp(dir.path() / "e2" / "ar_table.json"));

    ASSERT_EQ(run_cli("eval-counting" + eval_base + (dir.path() / "c1").string(), log), 0);
    ASSERT_EQ(run_cli("eval-counting" + eval_base + (dir.path() / "c2").string(), log), 0);
    EXPECT_EQ(slurp(dir.path() / "c1" / "counting.json"), slurp(dir.path() / "c2" / "counting.json"));
    EXPECT_EQ(slurp(dir.path() / "c1" / "detections.csv"),
              slurp(dir.path() / "c2" / "detections.csv"));

    // The counting report embeds per-scene ground-truth and predicted counts.
    const auto counting = nlohmann::json::parse(slurp(dir.path() / "c1" / "counting.json"));
    ASSERT_EQ(counting.at("scenes").size(), 5u);
    EXPECT_TRUE(counting.at("scenes")[0].contains("gt_count"));
    EXPECT_TRUE(counting.at("scenes")[0].contains("predicted_count"));
    EXPECT_TRUE(counting.contains("mae"));
    EXPECT_TRUE(counting.contains("rmse"));
    EXPECT_TRUE(counting.contains("config"));

    // AR is monotone non-decreasing in the budget.
    const auto table = nlohmann::json::parse(slurp(dir.path() / "e1" / "ar_table.json"));
    const auto& rows = table.at("rows");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_LE(rows[0].at("ar").get<double>(), rows[1].at("ar").get<double>() + 1e-12);
}

TEST_F(CliTest, OversizedBudgetWarnsAndClamps) {
    lpn_test::TempDir dir("cli_budget");
    const auto log = dir.path() / "log.txt";
    lpn::write_file(dir.path() / "cfg.json", R"({"train": {"epochs": 5, "feature_grid": 4}})");
    ASSERT_EQ(run_cli("gen --scenes 2 --seed 2 --output " + (dir.path() / "scenes").string(), log),
              0);
    ASSERT_EQ(run_cli("train --config " + (dir.path() / "cfg.json").string() + " --manifest " +
                          (dir.path() / "scenes" / "manifest.json").string() +
                          " --no-timestamp --output " + (dir.path() / "run").string(),
                      log),
              0);
    ASSERT_EQ(run_cli("eval-proposals --budgets 999999 --model " +
                          (dir.path() / "run" / "model.json").string() + " --manifest " +
                          (dir.path() / "scenes" / "manifest.json").string() +
                          " --no-timestamp --output " + (dir.path() / "e").string(),
                      log),
              0);
    EXPECT_NE(slurp(log).find("clamped"), std::string::npos);
}

TEST_F(CliTest, ScoreDumpsKernelMaps) {
    lpn_test::TempDir dir("cli_score");
    const auto log = dir.path() / "log.txt";
    ASSERT_EQ(run_cli("gen --scenes 3 --seed 6 --output " + (dir.path() / "scenes").string(), log),
              0);
    const std::string base =
        "score --manifest " + (dir.path() / "scenes" / "manifest.json").string();
    ASSERT_EQ(run_cli(base + " --output " + (dir.path() / "maps").string(), log), 0);
    for (int i = 0; i < 3; ++i) {
        EXPECT_TRUE(fs::exists(dir.path() / "maps" / ("kernel_scene_000" + std::to_string(i) + ".csv")));
    }
    // 192x192 at stride 8 -> 24 rows of 24 values.
    const std::string csv = slurp(dir.path() / "maps" / "kernel_scene_0000.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 24);

    ASSERT_EQ(run_cli(base + " --scene scene_0002 --output " + (dir.path() / "one").string(), log),
              0);
    EXPECT_TRUE(fs::exists(dir.path() / "one" / "kernel_scene_0002.csv"));
    EXPECT_FALSE(fs::exists(dir.path() / "one" / "kernel_scene_0000.csv"));
    EXPECT_EQ(run_cli(base + " --scene nope --output " + (dir.path() / "two").string(), log), 2);
}

TEST_F(CliTest, ExitCodesDistinguishFailureClasses) {
    lpn_test::TempDir dir("cli_exit");
    const auto log = dir.path() / "log.txt";

    // Usage error: unknown subcommand / missing required option.
    EXPECT_EQ(run_cli("explode", log), 1);
    EXPECT_EQ(run_cli("eval-proposals", log), 1);

    // Config error: unknown key.
    lpn::write_file(dir.path() / "bad_cfg.json", R"({"typo_key": 1})");
    EXPECT_EQ(run_cli("gen --config " + (dir.path() / "bad_cfg.json").string() + " --output " +
                          (dir.path() / "out").string(),
                      log),
              1);

    // Data error: malformed manifest.
    lpn::write_file(dir.path() / "bad_manifest.json", "[{\"scene_id\": \"x\"}]");
    lpn::write_file(dir.path() / "cfg.json", "{}");
    EXPECT_EQ(run_cli("score --manifest " + (dir.path() / "bad_manifest.json").string() +
                          " --output " + (dir.path() / "maps").string(),
                      log),
              2);

    // Numerical failure: training on a grid full of NaN aborts with code 3.
    ASSERT_EQ(run_cli("gen --scenes 1 --seed 1 --output " + (dir.path() / "nan").string(), log), 0);
    lpn::ImageGrid poisoned = lpn::read_grid(dir.path() / "nan" / "scene_0000.grid");
    std::fill(poisoned.values.begin(), poisoned.values.end(),
              std::numeric_limits<float>::quiet_NaN());
    lpn::write_grid(dir.path() / "nan" / "scene_0000.grid", poisoned);
    EXPECT_EQ(run_cli("train --manifest " + (dir.path() / "nan" / "manifest.json").string() +
                          " --no-timestamp --output " + (dir.path() / "nan_run").string(),
                      log),
              3);
    EXPECT_NE(slurp(log).find("numerical failure"), std::string::npos);

    // Success path returns 0 and help returns 0.
    EXPECT_EQ(run_cli("--help", log), 0);
}
