#include "sae/summary.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sae/error.hpp"

namespace sae {

double quantile(std::span<const double> values, double prob) {
  if (values.empty()) throw ValidationError("quantile of an empty sample");
  if (!(prob >= 0.0 && prob <= 1.0)) throw ValidationError("quantile probability must lie in [0, 1]");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double h = prob * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Summary summarize(std::span<const double> values, double level) {
  if (values.empty()) throw ValidationError("summary of an empty sample");
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("interval level must lie in (0, 1)");
  Summary s;
  const auto n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.sd = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  s.median = quantile(values, 0.5);
  s.lower = quantile(values, 0.5 * (1.0 - level));
  s.upper = quantile(values, 1.0 - 0.5 * (1.0 - level));
  return s;
}

Summary summarize(const Eigen::VectorXd& values, double level) {
  return summarize(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())), level);
}

Eigen::MatrixXi rank_draws(const Eigen::MatrixXd& draws) {
  Eigen::MatrixXi ranks(draws.rows(), draws.cols());
  std::vector<Eigen::Index> order(static_cast<std::size_t>(draws.cols()));
  for (Eigen::Index r = 0; r < draws.rows(); ++r) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return draws(r, a) < draws(r, b); });
    for (std::size_t k = 0; k < order.size(); ++k) ranks(r, order[k]) = static_cast<int>(k + 1);
  }
  return ranks;
}

std::vector<RankSummary> rank_distribution(const Eigen::MatrixXd& draws, double level) {
  if (draws.rows() == 0) throw ValidationError("rank distribution needs at least one draw");
  const Eigen::MatrixXi ranks = rank_draws(draws);
  std::vector<RankSummary> out;
  std::vector<double> col(static_cast<std::size_t>(draws.rows()));
  for (Eigen::Index a = 0; a < draws.cols(); ++a) {
    for (Eigen::Index r = 0; r < draws.rows(); ++r) col[static_cast<std::size_t>(r)] = ranks(r, a);
    const Summary s = summarize(col, level);
    out.push_back({s.median, s.lower, s.upper});
  }
  return out;
}

}  // namespace sae
