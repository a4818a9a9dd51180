#include "roughtfe/harness/commands.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace roughtfe;
using namespace roughtfe::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / "roughtfe_harness_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

ExperimentConfig small() {
  ExperimentConfig c;
  c.n = 64;
  c.replications = 5;
  c.epsilons = {0.2, 0.1, 0.05};
  c.grid_points = 5;
  return c;
}

std::map<std::string, std::string> read_report(const fs::path& p) {
  std::map<std::string, std::string> kv;
  std::ifstream is(p);
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

}  // namespace

TEST(Config, DefaultsValidate) { EXPECT_NO_THROW(validate(ExperimentConfig{})); }

TEST(Config, RejectsInvariantViolations) {
  auto bad = [](auto mutate) {
    ExperimentConfig c;
    mutate(c);
    return c;
  };
  EXPECT_THROW(validate(bad([](auto& c) { c.epsilons = {0.1, 0.2}; })), config_error);
  EXPECT_THROW(validate(bad([](auto& c) { c.epsilons = {1.5}; })), config_error);
  EXPECT_THROW(validate(bad([](auto& c) { c.epsilons = {}; })), config_error);
  EXPECT_THROW(validate(bad([](auto& c) { c.replications = 0; })), config_error);
  EXPECT_THROW(validate(bad([](auto& c) { c.n = 1; })), config_error);
  EXPECT_THROW(validate(bad([](auto& c) { c.alpha = 0.5; })), config_error);
  EXPECT_THROW(validate(bad([](auto& c) { c.family = "heston"; })), config_error);
  EXPECT_THROW(validate(bad([](auto& c) { c.theta_star = {1.0}; })), config_error);
}

TEST(Config, ApplySettingParsesAndRejectsUnknownKeys) {
  ExperimentConfig c;
  apply_setting(c, "mc.epsilons", "0.4, 0.2,0.1");
  ASSERT_EQ(c.epsilons.size(), 3u);
  EXPECT_EQ(c.epsilons[1], 0.2);
  apply_setting(c, "grid.n", "300");
  EXPECT_EQ(c.n, 300u);
  EXPECT_THROW(apply_setting(c, "grid.m", "3"), config_error);
  EXPECT_THROW(apply_setting(c, "grid.n", "three"), config_error);
}

TEST(Config, IniFileWithSubcommandOverride) {
  const auto dir = scratch("ini");
  const auto path = dir / "run.ini";
  std::ofstream(path) << "[model]\nfamily = constant_drift\ndtheta = 1\nx0 = 0\nlower = -1\nupper = 3\n"
                         "theta_star = 1\n[grid]\nn = 128\n[mc-rate]\ngrid.n = 64\n";
  const auto plain = load_config(path.string(), "simulate");
  EXPECT_EQ(plain.family, "constant_drift");
  EXPECT_EQ(plain.n, 128u);
  EXPECT_EQ(load_config(path.string(), "mc-rate").n, 64u);
  EXPECT_NO_THROW(validate(plain));

  std::ofstream(dir / "bad.ini") << "[grid]\nsteps = 10\n";
  EXPECT_THROW(load_config((dir / "bad.ini").string()), config_error);
}

TEST(Config, HashIgnoresWorkersAndOutput) {
  ExperimentConfig a, b;
  b.workers = 7;
  b.out = "elsewhere";
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.seed += 1;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(Pool, ResultsIndependentOfWorkerCount) {
  auto f = [](std::size_t i) { return static_cast<double>(i * i) + 0.5; };
  const auto one = parallel_map<double>(100, 1, f);
  const auto four = parallel_map<double>(100, 4, f);
  EXPECT_EQ(one, four);
  EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) { if (i == 7) throw std::runtime_error("x"); }),
               std::runtime_error);
}

TEST(RateFit, SyntheticLinearErrorsGiveSlopeOne) {
  const std::vector<double> eps = {0.2, 0.1, 0.05, 0.025};
  const auto fit = fit_loglog(eps, eps);
  EXPECT_NEAR(fit.slope, 1.0, 1e-14);
  EXPECT_NEAR(fit.intercept, 0.0, 1e-14);
}

TEST(McConsistency, RawTableShapeAndManifest) {
  auto c = small();
  c.out = scratch("mc").string();
  EXPECT_NO_THROW(run_command("mc-rate", c));
  const auto raw = slurp(fs::path(c.out) / "raw.csv");
  EXPECT_EQ(static_cast<std::size_t>(std::count(raw.begin(), raw.end(), '\n')),
            1 + c.replications * c.epsilons.size());
  const auto m = read_report(fs::path(c.out) / "manifest.txt");
  for (const char* key : {"config_hash", "seed", "alpha", "T", "n", "model", "artifact_version"})
    EXPECT_TRUE(m.count(key)) << key;
  EXPECT_EQ(m.at("config_hash"), config_hash(c));
}

TEST(McConsistency, ZeroNoiseIsDegenerate) {
  auto c = small();
  c.sigma = 0.0;
  const RateReport r = run_mc_consistency(RunContext(c));
  EXPECT_TRUE(r.degenerate);
  for (const auto& s : r.stats) EXPECT_LE(s.stat, RunContext(c).optimizer_floor());
  c.out = scratch("degenerate").string();
  EXPECT_EQ(run_command("mc-rate", c), kExitOk);
  EXPECT_EQ(read_report(fs::path(c.out) / "report.txt").at("degenerate"), "true");
}

TEST(Normality, ZeroNoiseBothSidesVanish) {
  auto c = small();
  c.sigma = 0.0;
  const auto r = run_normality(RunContext(c));
  EXPECT_TRUE(r.coupled.degenerate);
  for (Eigen::Index k = 0; k < r.limit_mean.size(); ++k) EXPECT_EQ(r.limit_mean(k), 0.0);
}

TEST(Normality, ConstantDriftOracleMatchesLimitVariance) {
  ExperimentConfig c = small();
  c.family = "constant_drift";
  c.dtheta = 1;
  c.x0 = {0.0};
  c.lower = {-1.0};
  c.upper = {3.0};
  c.theta_star = {1.0};
  c.replications = 400;
  c.epsilons = {0.05};
  const auto r = run_normality(RunContext(c));
  ASSERT_TRUE(r.has_oracle);
  EXPECT_LT(r.max_oracle_gap_in_se, 4.0);
}

TEST(Commands, ThresholdFailureExitsTwo) {
  auto c = small();
  c.slope_min = 5.0;
  c.slope_max = 6.0;
  c.out = scratch("threshold").string();
  EXPECT_EQ(run_command("mc-rate", c), kExitThreshold);
  EXPECT_EQ(read_report(fs::path(c.out) / "report.txt").at("status"), "fail");
}

TEST(Commands, UnknownSubcommandAndInvalidConfigThrow) {
  auto c = small();
  c.out = scratch("invalid").string();
  EXPECT_THROW(run_command("plot", c), config_error);
  c.n = 1;
  EXPECT_THROW(run_command("simulate", c), config_error);
}

TEST(Commands, EstimateReadsObservedPath) {
  auto c = small();
  const auto dir = scratch("estimate");
  const RunContext ctx(c);
  const auto x0 = solve_x0(ctx.model, ctx.theta_star, ctx.weights);
  write_path_csv((dir / "obs.csv").string(), x0.values);
  c.out = (dir / "out").string();
  CommandOptions o;
  o.obs_path = (dir / "obs.csv").string();
  EXPECT_EQ(run_command("estimate", c, o), kExitOk);
  const auto rep = read_report(dir / "out" / "report.txt");
  EXPECT_EQ(rep.at("boundary_hit"), "false");

  c.n = 32;  // grid of the observation no longer matches
  EXPECT_THROW(run_command("estimate", c, o), config_error);
}

TEST(Commands, RepeatAndWorkerCountGiveIdenticalBytes) {
  auto c = small();
  c.metric = "theta";
  const auto a = scratch("repro_a"), b = scratch("repro_b");
  c.out = a.string();
  c.workers = 1;
  run_command("normality", c);
  c.out = b.string();
  c.workers = 4;
  run_command("normality", c);
  for (const auto& e : fs::directory_iterator(a))
    EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path().filename();
}
