#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sae/bym2.hpp"
#include "sae/direct.hpp"
#include "sae/mcmc.hpp"
#include "sae/spatial.hpp"
#include "sae/summary.hpp"

namespace sae {

// Logit-scale direct estimates Z_i ~ N(theta_i, V_i) with V_i known and
// theta_i = x_i^T beta + b_i, b BYM2 over the adjacency graph.
struct SmoothedDirectSpec {
  SpatialStructure structure;
  AreaDirectEstimates data;
  // Area covariates, one row per structure node in node order, without the
  // intercept (added by the model). Zero columns means intercept only.
  Eigen::MatrixXd covariates;
  std::vector<std::string> covariate_names;
  Bym2Priors priors;
  ChainConfig mcmc;
  // Areas whose data are ignored (held out); they are still predicted.
  std::vector<std::string> held_out;
};

// Posterior of an area model: raw sampler output plus linear-predictor draws
// (pooled over chains) for every area in structure order.
struct AreaModelFit {
  std::vector<std::string> area_ids;
  PosteriorFit posterior;
  Eigen::MatrixXd theta;       // draws x areas, logit scale
  Eigen::MatrixXd prevalence;  // draws x areas, probability scale
  std::vector<std::string> used_areas;     // areas contributing data
  std::vector<std::string> dropped_areas;  // with reason, "id: reason"
};

AreaModelFit fit_smoothed_direct(const SmoothedDirectSpec& spec);

// Per-area summaries of prevalence draws (median, sd, 90% interval).
std::vector<Summary> posterior_prevalence(const Eigen::MatrixXd& prevalence_draws, double level = 0.9);

// Adds an intercept column in front of `covariates` and checks full column rank.
Eigen::MatrixXd design_with_intercept(const Eigen::MatrixXd& covariates, std::size_t areas);

}  // namespace sae
