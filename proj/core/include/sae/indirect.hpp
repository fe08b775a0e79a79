#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sae {

// B = [sum d x x^T]^{-1} sum d x y over all sampled units of all areas.
// X is units x p. Solved by QR on sqrt(d)-scaled rows; throws NumericError
// naming the condition number when the cross-product is singular.
Eigen::VectorXd pooled_weighted_slope(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& d);

struct SyntheticEstimate {
  double value = 0.0;
  bool outside_unit_interval = false;  // reported raw, never clamped
};

// xbar is areas x p; row i gives x_bar_i^T B.
std::vector<SyntheticEstimate> synthetic_estimate(const Eigen::MatrixXd& xbar, const Eigen::VectorXd& B);

// Hajek estimate of y plus (xbar_i - xhat_i)^T B, with xhat_i the Hajek
// covariate mean of the area sample. X is n_i x p.
double survey_regression_estimate(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const Eigen::VectorXd& d,
                                  const Eigen::VectorXd& xbar, const Eigen::VectorXd& B);

// Residual form: xbar_i^T B + sum_k w_k (y_k - x_k^T B) with w_k = d_k / sum d.
double survey_regression_residual_form(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const Eigen::VectorXd& d,
                                       const Eigen::VectorXd& xbar, const Eigen::VectorXd& B);

double composite_estimate(double survey_regression, double synthetic, double delta);

// Heuristic delta_i = n_i / (n_i + mean n).
std::vector<double> default_composite_weights(std::span<const double> sample_sizes);

// A CSV keyed by one id column with numeric covariate columns. When `columns`
// is empty every column other than the key is used.
struct KeyedCovariates {
  std::vector<std::string> keys;
  std::vector<std::string> names;
  Eigen::MatrixXd values;  // keys x names

  std::ptrdiff_t row_of(const std::string& key) const;  // -1 when absent
};

KeyedCovariates read_keyed_covariates(const std::filesystem::path& path, const std::string& key_column,
                                      const std::vector<std::string>& columns = {});

}  // namespace sae
