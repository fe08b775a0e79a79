#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sae/arealevel.hpp"
#include "sae/bym2.hpp"
#include "sae/mcmc.hpp"
#include "sae/population.hpp"
#include "sae/sampling.hpp"
#include "sae/spatial.hpp"

namespace sae {

// Beta-binomial log mass with mean p and overdispersion lambda, using shapes
// a = p(1-lambda)/lambda, b = (1-p)(1-lambda)/lambda so that
// Var(Y) = n p (1-p) (1 + (n-1) lambda). lambda == 0 is the binomial.
double betabinomial_logpmf(std::int64_t y, std::int64_t n, double p, double lambda);

// Draws from the same distribution (p ~ Beta(a, b), then binomial).
std::int64_t betabinomial_draw(std::int64_t n, double p, double lambda, Rng& rng);

struct ClusterRecord {
  std::string cluster_id;
  std::string area_id;
  bool urban = false;
  std::int64_t n = 0;  // tested
  std::int64_t y = 0;  // positive
  std::optional<Coordinates> coordinates;
};

using ClusterData = std::vector<ClusterRecord>;

ClusterData cluster_data_from_sample(const SurveySample& sample);

// area_id,q
std::map<std::string, double> read_urban_fractions(const std::filesystem::path& path);
// q per structure node; throws ValidationError naming any area without a value.
std::vector<double> urban_fractions_for(const SpatialStructure& structure, const std::map<std::string, double>& q);
std::map<std::string, double> frame_urban_fractions(const SamplingFrame& frame);

enum class LambdaPrior { pc_sqrt, uniform };

struct BetaBinomialSpec {
  SpatialStructure structure;
  ClusterData data;
  bool urban_effect = true;
  // Forces gamma to this value (no urban parameter) when set and urban_effect is false.
  double fixed_urban_log_odds = 0.0;
  Eigen::MatrixXd covariates;  // structure order, intercept added by the model
  std::vector<std::string> covariate_names;
  std::vector<double> urban_fractions;  // structure order
  Bym2Priors priors;
  bool overdispersion = true;
  LambdaPrior lambda_prior = LambdaPrior::pc_sqrt;
  double lambda_U = 0.5;  // on sqrt(lambda)
  double lambda_alpha = 0.01;
  ChainConfig mcmc;
  std::vector<std::string> held_out;
};

// theta holds the rural linear predictor; prevalence is the stratum-weighted
// aggregate (1 - q) expit(eta) + q expit(eta + gamma).
AreaModelFit fit_betabinomial(const BetaBinomialSpec& spec);

// Stratum-weighted aggregation per draw. rural_eta is draws x areas; gamma
// has one entry per draw.
Eigen::MatrixXd aggregate_strata(const Eigen::MatrixXd& rural_eta, const Eigen::VectorXd& gamma,
                                 std::span<const double> urban_fractions);

}  // namespace sae
