#include <cmath>

#include <gtest/gtest.h>

#include "sae/error.hpp"
#include "sae/mcmc.hpp"

namespace {

sae::Problem normal_target(double mean, double sd) {
  sae::Problem p;
  p.names = {"x"};
  p.init = Eigen::VectorXd::Zero(1);
  p.log_posterior = [mean, sd](const Eigen::VectorXd& x) {
    const double z = (x(0) - mean) / sd;
    return -0.5 * z * z;
  };
  p.blocks.push_back({"x", {0}, {}, {}, 1.0});
  return p;
}

sae::ChainConfig long_run() {
  sae::ChainConfig c;
  c.n_iter = 50000;
  c.burn_in = 5000;
  c.thin = 1;
  c.n_chains = 2;
  c.seed = 11;
  return c;
}

}  // namespace

TEST(Mcmc, StandardNormalMoments) {
  const auto fit = sae::run_chains(normal_target(0.0, 1.0), long_run());
  const Eigen::VectorXd x = fit.pooled_column(0);
  const double mean = x.mean();
  const double var = (x.array() - mean).square().sum() / static_cast<double>(x.size() - 1);
  EXPECT_NEAR(mean, 0.0, 0.02);
  EXPECT_NEAR(var, 1.0, 0.05);
  EXPECT_LT(fit.rhat[0], 1.05);
}

TEST(Mcmc, ConjugateNormalNormal) {
  // Z ~ N(theta, V), theta ~ N(0, s2): posterior N(s2 Z / (s2 + V), s2 V / (s2 + V)).
  const double z = 1.3;
  const double v = 0.4;
  const double s2 = 0.9;
  sae::Problem p;
  p.names = {"theta"};
  p.init = Eigen::VectorXd::Zero(1);
  p.log_posterior = [=](const Eigen::VectorXd& x) {
    return -0.5 * (z - x(0)) * (z - x(0)) / v - 0.5 * x(0) * x(0) / s2;
  };
  p.blocks.push_back({"theta", {0}, {}, {}, 1.0});
  const auto fit = sae::run_chains(p, long_run());
  const Eigen::VectorXd x = fit.pooled_column(0);
  const double mean = x.mean();
  const double var = (x.array() - mean).square().sum() / static_cast<double>(x.size() - 1);
  EXPECT_NEAR(mean / (s2 * z / (s2 + v)), 1.0, 0.01);
  EXPECT_NEAR(var / (s2 * v / (s2 + v)), 1.0, 0.05);
}

TEST(Mcmc, BlockProposalOnCorrelatedTarget) {
  sae::Problem p;
  p.names = {"a", "b"};
  p.init = Eigen::VectorXd::Zero(2);
  Eigen::Matrix2d prec;
  prec << 1.0, 0.9, 0.9, 1.0;
  prec = Eigen::Matrix2d(prec.inverse());
  p.log_posterior = [prec](const Eigen::VectorXd& x) { return -0.5 * x.dot(prec * x); };
  p.blocks.push_back({"ab", {0, 1}, {}, {}, 0.5});
  const auto fit = sae::run_chains(p, long_run());
  const Eigen::MatrixXd d = fit.pooled();
  const Eigen::RowVectorXd mu = d.colwise().mean();
  const Eigen::MatrixXd c = d.rowwise() - mu;
  const Eigen::MatrixXd cov = c.transpose() * c / static_cast<double>(d.rows() - 1);
  EXPECT_NEAR(cov(0, 1), 0.9, 0.06);
  EXPECT_NEAR(fit.acceptance[0][0], 0.234, 0.08);
}

TEST(Mcmc, SameSeedSameDraws) {
  auto cfg = long_run();
  cfg.n_iter = 2000;
  cfg.burn_in = 500;
  const auto a = sae::run_chains(normal_target(1.0, 2.0), cfg);
  cfg.threads = 1;
  const auto b = sae::run_chains(normal_target(1.0, 2.0), cfg);
  ASSERT_EQ(a.draws.size(), b.draws.size());
  for (std::size_t c = 0; c < a.draws.size(); ++c) EXPECT_TRUE(a.draws[c] == b.draws[c]);
  EXPECT_FALSE(a.draws[0] == a.draws[1]);
}

TEST(Mcmc, RetainedCountFormula) {
  sae::ChainConfig cfg;
  cfg.n_iter = 1003;
  cfg.burn_in = 100;
  cfg.thin = 7;
  cfg.n_chains = 2;
  const auto fit = sae::run_chains(normal_target(0.0, 1.0), cfg);
  EXPECT_EQ(fit.draws[0].rows(), (1003 - 100) / 7);
  EXPECT_EQ(cfg.retained(), 129u);
}

TEST(Mcmc, ResumeFromSavedStateReproducesDraws) {
  auto cfg = long_run();
  cfg.n_iter = 3000;
  cfg.burn_in = 1000;
  cfg.thin = 3;
  sae::Problem p;
  p.names = {"a", "b"};
  p.init = Eigen::VectorXd::Zero(2);
  p.log_posterior = [](const Eigen::VectorXd& x) { return -0.5 * (x(0) * x(0) + 4.0 * (x(1) - x(0)) * (x(1) - x(0))); };
  p.blocks.push_back({"a", {0}, {}, {}, 1.0});
  p.blocks.push_back({"ab", {0, 1}, {}, {}, 1.0});
  const auto fit = sae::run_chains(p, cfg);
  for (std::size_t c = 0; c < 2; ++c) {
    const Eigen::MatrixXd again = sae::continue_chain(p, cfg, fit.burn_in_states[c]);
    EXPECT_TRUE(again == fit.draws[c]);
  }
}

TEST(Mcmc, NanAtInitIsAnError) {
  auto p = normal_target(0.0, 1.0);
  p.log_posterior = [](const Eigen::VectorXd&) { return std::nan(""); };
  EXPECT_THROW(sae::run_chains(p, long_run()), sae::NumericError);
}

TEST(Mcmc, PersistentNanReportsState) {
  auto p = normal_target(0.0, 1.0);
  p.init(0) = 0.0;
  p.log_posterior = [](const Eigen::VectorXd& x) { return x(0) == 0.0 ? 0.0 : std::nan(""); };
  try {
    sae::run_chains(p, long_run());
    FAIL() << "expected NumericError";
  } catch (const sae::NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("x="), std::string::npos);
  }
}

TEST(Mcmc, InvalidConfig) {
  sae::ChainConfig cfg;
  cfg.burn_in = cfg.n_iter;
  EXPECT_THROW(cfg.validate(), sae::ValidationError);
  cfg = {};
  cfg.thin = 0;
  EXPECT_THROW(cfg.validate(), sae::ValidationError);
}

TEST(GelmanRubin, NeedsTwoChains) {
  EXPECT_THROW(sae::gelman_rubin({Eigen::MatrixXd::Zero(10, 1)}), sae::ValidationError);
}

TEST(GelmanRubin, IdenticalConstantChainsAreDegenerate) {
  const Eigen::MatrixXd c = Eigen::MatrixXd::Constant(100, 1, 2.0);
  EXPECT_TRUE(std::isnan(sae::gelman_rubin({c, c})[0]));
}

TEST(GelmanRubin, SeparatedChainsFlagged) {
  sae::Rng rng(3);
  Eigen::MatrixXd a(1000, 1);
  Eigen::MatrixXd b(1000, 1);
  for (Eigen::Index i = 0; i < 1000; ++i) {
    a(i, 0) = -5.0 + rng.normal();
    b(i, 0) = 5.0 + rng.normal();
  }
  EXPECT_GT(sae::gelman_rubin({a, b})[0], 1.2);
}

TEST(GelmanRubin, SameTargetConverges) {
  sae::Rng rng(4);
  Eigen::MatrixXd a(2000, 1);
  Eigen::MatrixXd b(2000, 1);
  for (Eigen::Index i = 0; i < 2000; ++i) {
    a(i, 0) = rng.normal();
    b(i, 0) = rng.normal();
  }
  EXPECT_LT(sae::gelman_rubin({a, b})[0], 1.05);
}
