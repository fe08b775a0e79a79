#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sae/mcmc.hpp"
#include "sae/spatial.hpp"
#include "sae/unitlevel.hpp"

namespace sae {

struct GpPriors {
  double sigma_U = 1.0;      // PC prior on the field SD: Pr(sigma_S > U) = alpha
  double sigma_alpha = 0.01;
  // PC prior on the range: Pr(range < rho0) = alpha. rho0 <= 0 picks a tenth
  // of the largest distance between clusters.
  double range_rho0 = 0.0;
  double range_alpha = 0.05;
  double nugget_U = 1.0;     // PC prior on the nugget SD
  double nugget_alpha = 0.01;
  double smoothness = 1.5;
  double fixed_effect_sd = 31.6;
  std::optional<double> fixed_range;   // no range parameter when set
  std::optional<double> fixed_nugget;  // 0 removes the nugget entirely
};

// eta_c = beta0 [+ gamma urban_c] + S(s_c) + eps_c with S a Matern GP and
// eps_c iid N(0, sigma_eps^2). Binomial likelihood, or beta-binomial when
// overdispersion is on. Dense Cholesky, so a few hundred clusters at most.
struct GpUnitSpec {
  ClusterData data;  // every record needs coordinates, all distinct
  bool urban_effect = true;
  bool overdispersion = false;
  double lambda_U = 0.5;
  double lambda_alpha = 0.01;
  GpPriors priors;
  ChainConfig mcmc;
  double jitter = 1e-8;  // added to the correlation diagonal
};

struct GpFit {
  PosteriorFit posterior;
  std::vector<Point2> sites;
  std::vector<std::string> cluster_ids;
  double smoothness = 1.5;
  double jitter = 1e-8;
  // Pooled draws of the hyperparameters and the field at the sites.
  Eigen::VectorXd intercept;
  Eigen::VectorXd gamma;  // zeros without an urban effect
  Eigen::VectorXd sigma;
  Eigen::VectorXd range;
  Eigen::VectorXd nugget;
  Eigen::MatrixXd field;  // draws x sites, S without nugget
};

GpFit fit_gp_unit(const GpUnitSpec& spec);

// Field draws at new points by conditional simulation given each posterior
// draw of the field at the sites. Deterministic for a given seed.
Eigen::MatrixXd predict_field(const GpFit& fit, const std::vector<Point2>& points, std::uint64_t seed);

struct Pixel {
  std::string area_id;
  Point2 location;
  double weight = 1.0;
  bool urban = false;
};

using PixelGrid = std::vector<Pixel>;

// area_id,lon,lat,weight,urban
PixelGrid read_pixel_csv(const std::filesystem::path& path);

// Population-weighted average of expit(beta0 + gamma urban + S) over each
// area's pixels, nugget left out. Columns follow `areas`; throws when an area
// has no pixels or zero total weight.
Eigen::MatrixXd aggregate_continuous(const GpFit& fit, const PixelGrid& grid, const std::vector<std::string>& areas,
                                     std::uint64_t seed);

// Same aggregation given pixel-level risk draws (draws x pixels).
Eigen::MatrixXd aggregate_pixels(const Eigen::MatrixXd& pixel_risk, const PixelGrid& grid,
                                 const std::vector<std::string>& areas);

}  // namespace sae
