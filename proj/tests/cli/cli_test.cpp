#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "sae/csv.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("sae_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const std::string& name, const json& cfg) const {
    const fs::path p = dir_ / name;
    std::ofstream(p) << cfg.dump(2);
    return p;
  }

  int run(const std::string& args) const {
    const std::string cmd = std::string(SAE_CLI) + " " + args + " > " + (dir_ / "stdout.txt").string() + " 2> " +
                            (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string stderr_text() const { return slurp(dir_ / "stderr.txt"); }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  json synthetic_config() const {
    return json{{"seed", 42},
                {"synthetic_graph", {{"rows", 2}, {"cols", 4}}},
                {"synthetic_frame", {{"urban_clusters_per_area", 6}, {"rural_clusters_per_area", 10}, {"grid_cols", 4}}},
                {"population", {{"urban_log_odds", 0.5}}},
                {"design", {{"urban_clusters", 2}, {"rural_clusters", 3}, {"households_per_cluster", 15}}},
                {"mcmc", {{"n_iter", 1500}, {"burn_in", 500}, {"thin", 2}, {"n_chains", 2}}}};
  }

  // simulate + sample into dir_/<tag>, returns the analysis config path.
  fs::path simulate_and_sample(const std::string& tag) {
    const fs::path out = dir_ / tag;
    json cfg = synthetic_config();
    EXPECT_EQ(run("simulate --config " + write_config(tag + "_sim.json", cfg).string() + " --out " + (out / "sim").string()), 0)
        << stderr_text();
    cfg["inputs"] = {{"frame", (out / "sim" / "frame.csv").string()},
                     {"adjacency", (out / "sim" / "adjacency.txt").string()},
                     {"population", (out / "sim" / "population.csv").string()}};
    const fs::path sample_cfg = write_config(tag + "_sample.json", cfg);
    EXPECT_EQ(run("sample --config " + sample_cfg.string() + " --out " + (out / "sample").string()), 0) << stderr_text();
    cfg["inputs"]["sample"] = (out / "sample" / "sample.csv").string();
    return write_config(tag + "_analysis.json", cfg);
  }

  fs::path dir_;
};

TEST_F(CliTest, PooledDirectFromDistrictTable) {
  const json cfg = {{"inputs", {{"sample", std::string(SAE_DATA_DIR) + "/malawi_2015_16_f15_29.csv"}}},
                    {"direct", {{"variance", "binomial"}, {"pooled", true}, {"label", "Malawi"}}}};
  ASSERT_EQ(run("direct --config " + write_config("c.json", cfg).string() + " --out " + (dir_ / "o").string()), 0)
      << stderr_text();
  const auto t = sae::csv::read(dir_ / "o" / "estimates.csv");
  ASSERT_EQ(t.rows(), 28u);
  EXPECT_EQ(t.text(27, "area_id"), "Malawi");
  EXPECT_NEAR(t.number(27, "estimate"), 0.0628, 5e-5);
  EXPECT_GE(t.number(27, "sd"), 0.0036);
  EXPECT_LE(t.number(27, "sd"), 0.00375);
  EXPECT_EQ(t.text(27, "model_tag"), "direct");
}

TEST_F(CliTest, MissingInputFileIsValidationError) {
  const json cfg = {{"inputs", {{"sample", (dir_ / "nope.csv").string()}}}};
  EXPECT_EQ(run("direct --config " + write_config("c.json", cfg).string() + " --out " + (dir_ / "o").string()), 2);
  EXPECT_NE(stderr_text().find("nope.csv"), std::string::npos);
}

TEST_F(CliTest, EmptySampleIsValidationError) {
  std::ofstream(dir_ / "empty.csv") << "area_id,n_tested,y_positive\n";
  const json cfg = {{"inputs", {{"sample", (dir_ / "empty.csv").string()}}}};
  EXPECT_EQ(run("direct --config " + write_config("c.json", cfg).string() + " --out " + (dir_ / "o").string()), 2);
}

TEST_F(CliTest, UnknownConfigKeyIsRejected) {
  const json cfg = {{"seed", 1}, {"mcmc", {{"n_iterations", 10}}}};
  EXPECT_EQ(run("smooth --config " + write_config("c.json", cfg).string() + " --out " + (dir_ / "o").string()), 2);
  EXPECT_NE(stderr_text().find("n_iterations"), std::string::npos);
}

TEST_F(CliTest, BadCommandLineExitsTwo) {
  EXPECT_EQ(run("direct --no-such-flag"), 2);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(CliTest, MissingSeedIsRejectedForStochasticCommands) {
  json cfg = synthetic_config();
  cfg.erase("seed");
  EXPECT_EQ(run("simulate --config " + write_config("c.json", cfg).string() + " --out " + (dir_ / "o").string()), 2);
  EXPECT_EQ(run("simulate --seed 3 --config " + write_config("c.json", cfg).string() + " --out " + (dir_ / "o").string()), 0)
      << stderr_text();
}

TEST_F(CliTest, RerunsAreByteIdentical) {
  const fs::path a = simulate_and_sample("a");
  const fs::path b = simulate_and_sample("b");
  for (const char* f : {"sim/population.csv", "sim/truth.csv", "sim/frame.csv", "sim/adjacency.txt", "sample/sample.csv"}) {
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
  }
  ASSERT_EQ(run("smooth --threads 1 --config " + a.string() + " --out " + (dir_ / "a" / "fit").string()), 0) << stderr_text();
  ASSERT_EQ(run("smooth --threads 2 --config " + b.string() + " --out " + (dir_ / "b" / "fit").string()), 0) << stderr_text();
  for (const char* f : {"estimates.csv", "prevalence_draws.csv", "posterior.csv"}) {
    EXPECT_EQ(slurp(dir_ / "a" / "fit" / f), slurp(dir_ / "b" / "fit" / f)) << f;
  }
  // A different seed gives a different population.
  EXPECT_EQ(run("simulate --seed 43 --config " + (dir_ / "a_sim.json").string() + " --out " + (dir_ / "c").string()), 0);
  EXPECT_NE(slurp(dir_ / "a" / "sim" / "population.csv"), slurp(dir_ / "c" / "population.csv"));
}

TEST_F(CliTest, RunMetadataReplaysTheRun) {
  const fs::path cfg = simulate_and_sample("r");
  ASSERT_EQ(run("unit --config " + cfg.string() + " --out " + (dir_ / "u1").string()), 0) << stderr_text();
  ASSERT_EQ(run("unit --config " + (dir_ / "u1" / "run.json").string() + " --out " + (dir_ / "u2").string()), 0)
      << stderr_text();
  EXPECT_EQ(slurp(dir_ / "u1" / "estimates.csv"), slurp(dir_ / "u2" / "estimates.csv"));
  EXPECT_EQ(slurp(dir_ / "u1" / "run.json"), slurp(dir_ / "u2" / "run.json"));

  const json meta = json::parse(slurp(dir_ / "u1" / "run.json"));
  EXPECT_EQ(meta["command"], "unit");
  EXPECT_EQ(meta["seed"], 42);
  EXPECT_EQ(meta["diagnostics"]["model_tag"], "unit_urban");
  EXPECT_TRUE(meta["diagnostics"].contains("max_rhat"));
  EXPECT_EQ(meta["config_hash"].get<std::string>().size(), 16u);
}

TEST_F(CliTest, RankNeedsNoSeed) {
  std::ofstream(dir_ / "draws.csv") << "draw,B,A\n0,0.2,0.1\n1,0.3,0.1\n2,0.1,0.2\n";
  const json cfg = {{"inputs", {{"draws", (dir_ / "draws.csv").string()}}}};
  ASSERT_EQ(run("rank --config " + write_config("c.json", cfg).string() + " --out " + (dir_ / "o").string()), 0)
      << stderr_text();
  const auto t = sae::csv::read(dir_ / "o" / "ranks.csv");
  ASSERT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.text(0, "area_id"), "B");
  EXPECT_EQ(t.number(0, "rank_median"), 2.0);
  EXPECT_EQ(t.number(1, "rank_median"), 1.0);
}

}  // namespace
