#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sae/error.hpp"
#include "sae/priors.hpp"
#include "sae/spatial.hpp"

namespace {

double density_sd(double s) { return std::exp(sae::pc_prior_sd_logdensity(s, 1.0, 0.01)); }

}  // namespace

TEST(PcSdPrior, RateForDefaultTail) {
  EXPECT_NEAR(sae::pc_sd_rate(1.0, 0.01), 4.60517, 1e-5);
  EXPECT_NEAR(sae::pc_prior_sd_logdensity(1.0, 1.0, 0.01), std::log(4.605170185988091) - 4.605170185988091, 1e-12);
  EXPECT_THROW(sae::pc_prior_sd_logdensity(0.0, 1.0, 0.01), sae::ValidationError);
}

TEST(PcSdPrior, TailProbabilityIsAlpha) {
  const double below = oracle::simpson(density_sd, 1e-300, 1.0, 2000);
  EXPECT_NEAR(1.0 - below, 0.01, 1e-9);
  const double below2 = oracle::simpson([](double s) { return std::exp(sae::pc_prior_sd_logdensity(s, 0.5, 0.2)); },
                                        1e-300, 0.5, 2000);
  EXPECT_NEAR(1.0 - below2, 0.2, 1e-9);
}

TEST(PcSdPrior, IntegratesToOne) {
  EXPECT_NEAR(oracle::simpson(density_sd, 1e-300, 12.0, 20000), 1.0, 1e-6);
}

TEST(PcSdPrior, RejectsInvalidTail) {
  EXPECT_THROW(sae::pc_sd_rate(0.0, 0.01), sae::ValidationError);
  EXPECT_THROW(sae::pc_sd_rate(1.0, 0.0), sae::ValidationError);
  EXPECT_THROW(sae::pc_sd_rate(1.0, 1.0), sae::ValidationError);
  EXPECT_THROW(sae::pc_prior_sd_logdensity(1.0, -1.0, 0.5), sae::ValidationError);
}

TEST(SqrtExponentialPrior, TailOnSquareRoot) {
  // Substitute x = t^2 to remove the singularity at zero.
  auto f = [](double t) { return 2.0 * t * std::exp(sae::sqrt_exponential_logdensity(t * t, 0.5, 0.01)); };
  EXPECT_NEAR(oracle::simpson(f, 1e-12, 0.5, 4000), 0.99, 1e-8);
  EXPECT_NEAR(oracle::simpson(f, 1e-12, 8.0, 40000), 1.0, 1e-8);
}

TEST(RangePrior, LowerTailIsAlpha) {
  auto f = [](double r) { return std::exp(sae::pc_prior_range_logdensity(r, 0.3, 0.05)); };
  EXPECT_NEAR(oracle::simpson(f, 1e-9, 0.3, 20000), 0.05, 1e-7);
}

TEST(NormalPrior, StandardValue) {
  EXPECT_NEAR(sae::normal_logdensity(0.0, 0.0, 1.0), -0.5 * std::log(2.0 * M_PI), 1e-15);
  EXPECT_NEAR(sae::normal_logdensity(3.0, 1.0, 2.0), -0.5 * std::log(8.0 * M_PI) - 0.5, 1e-15);
}

TEST(PcPhiPrior, DefaultTailOnPlanarGraph) {
  const auto g = sae::random_planar_graph(3, 9, 5);
  const sae::PcPhiPrior prior(g, 0.5, 2.0 / 3.0);
  auto f = [&](double phi) { return std::exp(prior.log_density(phi)); };
  const double total = oracle::simpson(f, 1e-9, 1.0 - 1e-9, 40000);
  const double upper = oracle::simpson(f, 0.5, 1.0 - 1e-9, 20000);
  EXPECT_NEAR(total, 1.0, 1e-3);
  EXPECT_NEAR(upper / total, 2.0 / 3.0, 0.01);
  EXPECT_NEAR(prior.upper_tail(0.5), 2.0 / 3.0, 1e-9);
}

TEST(PcPhiPrior, PositiveAndFiniteOnGrid) {
  const auto g = sae::random_planar_graph(3, 9, 6);
  const sae::PcPhiPrior prior(g, 0.5, 2.0 / 3.0);
  for (int k = 1; k <= 99; ++k) {
    const double v = prior.log_density(k / 100.0);
    EXPECT_TRUE(std::isfinite(v)) << k;
  }
}

TEST(PcPhiPrior, TableMatchesExactOffGrid) {
  const auto g = sae::random_planar_graph(4, 5, 2);
  for (double alpha : {2.0 / 3.0, 0.1}) {
    const sae::PcPhiPrior prior(g, 0.5, alpha);
    for (double phi = 0.0137; phi < 0.99; phi += 0.0311) {
      EXPECT_NEAR(std::exp(prior.log_density(phi)), std::exp(prior.log_density_exact(phi)), 1e-4) << phi;
    }
  }
}

TEST(PcPhiPrior, DistanceStartsAtZeroAndIncreases) {
  const auto g = sae::random_planar_graph(3, 4, 1);
  const sae::PcPhiPrior prior(g, 0.5, 0.5);
  EXPECT_EQ(prior.distance(0.0), 0.0);
  double last = 0.0;
  for (int k = 1; k <= 20; ++k) {
    const double d = prior.distance(k / 20.0);
    EXPECT_GT(d, last);
    last = d;
  }
}
