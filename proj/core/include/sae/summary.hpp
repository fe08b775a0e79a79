#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sae {

// Inclusive linear interpolation between order statistics (type 7).
double quantile(std::span<const double> values, double prob);

struct Summary {
  double mean = 0.0;
  double sd = 0.0;
  double median = 0.0;
  double lower = 0.0;  // 5%
  double upper = 0.0;  // 95%
};

// Default interval is 90%.
Summary summarize(std::span<const double> values, double level = 0.9);
Summary summarize(const Eigen::VectorXd& values, double level = 0.9);

// Ranks each row of `draws` (draws x areas) ascending: rank 1 is the lowest
// value; ties go to the lower column index first.
Eigen::MatrixXi rank_draws(const Eigen::MatrixXd& draws);

struct RankSummary {
  double median = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

std::vector<RankSummary> rank_distribution(const Eigen::MatrixXd& draws, double level = 0.9);

}  // namespace sae
