#include "sae/indirect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "sae/csv.hpp"
#include "sae/error.hpp"

namespace sae {

Eigen::VectorXd pooled_weighted_slope(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& d) {
  if (X.rows() != y.size() || X.rows() != d.size()) throw ValidationError("pooled_weighted_slope: dimension mismatch");
  if (X.rows() == 0 || X.cols() == 0) throw ValidationError("pooled_weighted_slope: empty design");
  if ((d.array() <= 0.0).any()) throw ValidationError("pooled_weighted_slope: weights must be positive");
  const Eigen::VectorXd root = d.array().sqrt();
  const Eigen::MatrixXd A = root.asDiagonal() * X;
  const Eigen::VectorXd b = root.cwiseProduct(y);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  // Singular values of A are square roots of those of the cross-product.
  const double cond = smin > 0.0 ? (smax / smin) * (smax / smin) : std::numeric_limits<double>::infinity();
  if (X.rows() < X.cols() || !(cond < 1e12)) {
    throw NumericError("weighted cross-product is singular (condition number " + csv::format(cond) + ")");
  }
  return A.colPivHouseholderQr().solve(b);
}

std::vector<SyntheticEstimate> synthetic_estimate(const Eigen::MatrixXd& xbar, const Eigen::VectorXd& B) {
  if (xbar.cols() != B.size()) throw ValidationError("synthetic_estimate: covariate dimension mismatch");
  std::vector<SyntheticEstimate> out;
  for (Eigen::Index i = 0; i < xbar.rows(); ++i) {
    const double v = xbar.row(i).dot(B);
    out.push_back({v, v < 0.0 || v > 1.0});
  }
  return out;
}

namespace {

void check_area(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const Eigen::VectorXd& d,
                const Eigen::VectorXd& xbar, const Eigen::VectorXd& B) {
  if (y.size() == 0) throw ValidationError("no data in domain");
  if (X.rows() != y.size() || d.size() != y.size()) throw ValidationError("survey regression: dimension mismatch");
  if (X.cols() != xbar.size() || B.size() != xbar.size()) {
    throw ValidationError("survey regression: covariate dimension mismatch");
  }
  if ((d.array() <= 0.0).any()) throw ValidationError("survey regression: weights must be positive");
}

}  // namespace

double survey_regression_estimate(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const Eigen::VectorXd& d,
                                  const Eigen::VectorXd& xbar, const Eigen::VectorXd& B) {
  check_area(y, X, d, xbar, B);
  const double sd = d.sum();
  const double yhat = d.dot(y) / sd;
  const Eigen::VectorXd xhat = X.transpose() * d / sd;
  return yhat + (xbar - xhat).dot(B);
}

double survey_regression_residual_form(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const Eigen::VectorXd& d,
                                       const Eigen::VectorXd& xbar, const Eigen::VectorXd& B) {
  check_area(y, X, d, xbar, B);
  const Eigen::VectorXd resid = y - X * B;
  return xbar.dot(B) + d.dot(resid) / d.sum();
}

double composite_estimate(double sr, double syn, double delta) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw ValidationError("composite weight delta must lie in [0, 1]");
  return delta * sr + (1.0 - delta) * syn;
}

std::vector<double> default_composite_weights(std::span<const double> n) {
  if (n.empty()) return {};
  double mean = 0.0;
  for (double v : n) {
    if (!(v >= 0.0)) throw ValidationError("sample sizes must be >= 0");
    mean += v;
  }
  mean /= static_cast<double>(n.size());
  std::vector<double> out;
  for (double v : n) out.push_back(mean > 0.0 ? v / (v + mean) : 0.0);
  return out;
}

std::ptrdiff_t KeyedCovariates::row_of(const std::string& key) const {
  const auto it = std::find(keys.begin(), keys.end(), key);
  return it == keys.end() ? -1 : it - keys.begin();
}

KeyedCovariates read_keyed_covariates(const std::filesystem::path& path, const std::string& key_column,
                                      const std::vector<std::string>& columns) {
  const csv::Table t = csv::read(path);
  KeyedCovariates out;
  if (columns.empty()) {
    for (const auto& h : t.header()) {
      if (h != key_column) out.names.push_back(h);
    }
  } else {
    out.names = columns;
  }
  for (const auto& n : out.names) t.column(n);  // validates presence
  t.column(key_column);
  out.values.resize(static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(out.names.size()));
  std::map<std::string, std::size_t> seen;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const std::string key = t.text(r, key_column);
    if (!seen.emplace(key, r).second) {
      throw ValidationError(path.string() + " line " + std::to_string(t.line_of(r)) + ": duplicate key '" + key + "'");
    }
    out.keys.push_back(key);
    for (std::size_t c = 0; c < out.names.size(); ++c) {
      out.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = t.number(r, out.names[c]);
    }
  }
  return out;
}

}  // namespace sae
