#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sae/direct.hpp"
#include "sae/error.hpp"
#include "sae/indirect.hpp"
#include "sae/rng.hpp"

namespace {

struct Data {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::VectorXd d;
};

Data make_data(int n, int p, std::uint64_t seed) {
  sae::Rng rng(seed);
  Data out{Eigen::MatrixXd(n, p), Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (int i = 0; i < n; ++i) {
    out.X(i, 0) = 1.0;
    for (int j = 1; j < p; ++j) out.X(i, j) = rng.normal();
    out.y(i) = rng.bernoulli(0.3) ? 1.0 : 0.0;
    out.d(i) = rng.uniform(1.0, 5.0);
  }
  return out;
}

}  // namespace

TEST(PooledSlope, InterceptOnlyIsHajekMean) {
  const Data a = make_data(80, 1, 2);
  const Eigen::VectorXd B = sae::pooled_weighted_slope(a.X, a.y, a.d);
  const std::vector<double> y(a.y.data(), a.y.data() + a.y.size());
  const std::vector<double> d(a.d.data(), a.d.data() + a.d.size());
  EXPECT_NEAR(B(0), sae::ht_estimate(y, d), 1e-12);
}

TEST(PooledSlope, ExactFitRecovered) {
  Data a = make_data(60, 3, 4);
  const Eigen::Vector3d beta(0.2, -0.05, 0.1);
  a.y = a.X * beta;
  EXPECT_NEAR((sae::pooled_weighted_slope(a.X, a.y, a.d) - beta).cwiseAbs().maxCoeff(), 0.0, 1e-10);
}

TEST(PooledSlope, MatchesNormalEquations) {
  const Data a = make_data(300, 4, 5);
  const Eigen::VectorXd B = sae::pooled_weighted_slope(a.X, a.y, a.d);
  EXPECT_NEAR((B - oracle::normal_equations(a.X, a.y, a.d)).cwiseAbs().maxCoeff(), 0.0, 1e-8);
}

TEST(PooledSlope, SingularReportsCondition) {
  Data a = make_data(20, 3, 6);
  a.X.col(2) = 2.0 * a.X.col(1);
  try {
    sae::pooled_weighted_slope(a.X, a.y, a.d);
    FAIL();
  } catch (const sae::NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("condition number"), std::string::npos);
  }
}

TEST(Synthetic, InterceptOnlyAndSymmetry) {
  Eigen::MatrixXd xbar(3, 2);
  xbar << 1, 0.3, 1, 0.3, 1, 2.0;
  Eigen::Vector2d B(0.1, 0.5);
  const auto s = sae::synthetic_estimate(xbar, B);
  EXPECT_EQ(s[0].value, s[1].value);
  EXPECT_NEAR(s[2].value, 1.1, 1e-15);
  EXPECT_TRUE(s[2].outside_unit_interval);
  EXPECT_FALSE(s[0].outside_unit_interval);
  const auto i = sae::synthetic_estimate(Eigen::MatrixXd::Ones(4, 1), Eigen::VectorXd::Constant(1, 0.07));
  for (const auto& e : i) EXPECT_EQ(e.value, 0.07);
}

TEST(Synthetic, PerUnitAverageIdentity) {
  const Data a = make_data(40, 3, 8);
  const Eigen::Vector3d B(0.05, 0.02, -0.01);
  const Eigen::RowVectorXd xbar = a.X.colwise().mean();
  const double per_unit = (a.X * B).mean();
  EXPECT_NEAR(sae::synthetic_estimate(xbar, B)[0].value, per_unit, 1e-12);
}

TEST(SurveyRegression, ReducesToHtWhenCorrectionVanishes) {
  const Data a = make_data(30, 2, 9);
  const std::vector<double> y(a.y.data(), a.y.data() + a.y.size());
  const std::vector<double> d(a.d.data(), a.d.data() + a.d.size());
  const double ht = sae::ht_estimate(y, d);
  const Eigen::VectorXd xhat = (a.X.transpose() * a.d) / a.d.sum();
  EXPECT_NEAR(sae::survey_regression_estimate(a.y, a.X, a.d, xhat, Eigen::Vector2d(0.3, 0.4)), ht, 1e-12);
  EXPECT_NEAR(sae::survey_regression_estimate(a.y, a.X, a.d, Eigen::Vector2d(1, 5), Eigen::Vector2d::Zero()), ht, 1e-15);
  EXPECT_THROW(sae::survey_regression_estimate(Eigen::VectorXd(0), Eigen::MatrixXd(0, 2), Eigen::VectorXd(0),
                                               Eigen::Vector2d(1, 0), Eigen::Vector2d::Zero()),
               sae::ValidationError);
}

TEST(SurveyRegression, BothFormsAgree) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Data a = make_data(25, 3, seed);
    const Eigen::Vector3d xbar(1.0, 0.2, -0.4);
    const Eigen::Vector3d B(0.1, 0.03, 0.2);
    EXPECT_NEAR(sae::survey_regression_estimate(a.y, a.X, a.d, xbar, B),
                sae::survey_regression_residual_form(a.y, a.X, a.d, xbar, B), 1e-10);
  }
}

TEST(Composite, HandValuesAndRange) {
  EXPECT_EQ(sae::composite_estimate(0.2, 0.1, 1.0), 0.2);
  EXPECT_EQ(sae::composite_estimate(0.2, 0.1, 0.0), 0.1);
  EXPECT_NEAR(sae::composite_estimate(0.2, 0.1, 0.5), 0.15, 1e-15);
  EXPECT_THROW(sae::composite_estimate(0.2, 0.1, 1.5), sae::ValidationError);
  EXPECT_THROW(sae::composite_estimate(0.2, 0.1, -0.1), sae::ValidationError);
  const auto w = sae::default_composite_weights(std::vector<double>{10, 30, 50});
  EXPECT_NEAR(w[0], 10.0 / 40.0, 1e-15);
  EXPECT_NEAR(w[2], 50.0 / 80.0, 1e-15);
}

TEST(KeyedCovariates, ReadsSelectedColumns) {
  const auto path = std::filesystem::temp_directory_path() / "sae_keyed_cov.csv";
  {
    std::ofstream out(path);
    out << "area_id,x1,x2\nA,1.5,2\nB,-1,0.25\n";
  }
  const auto k = sae::read_keyed_covariates(path, "area_id", {"x2"});
  ASSERT_EQ(k.names.size(), 1u);
  EXPECT_EQ(k.values(1, 0), 0.25);
  EXPECT_EQ(k.row_of("A"), 0);
  EXPECT_EQ(k.row_of("Z"), -1);
  EXPECT_EQ(sae::read_keyed_covariates(path, "area_id").names.size(), 2u);
  EXPECT_THROW(sae::read_keyed_covariates(path, "area_id", {"x9"}), sae::ValidationError);
  std::filesystem::remove(path);
}
