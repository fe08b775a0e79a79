#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sae/spatial.hpp"

namespace sae {

struct Coordinates {
  double lon = 0.0;
  double lat = 0.0;
};

struct Stratum {
  std::string id;
  std::string area_id;
  bool urban = false;
};

struct Cluster {
  std::string id;
  std::string stratum_id;
  std::int64_t households = 0;
  std::optional<Coordinates> coordinates;
};

// Census-like selection frame: strata (area x urban/rural) and the clusters
// (enumeration areas) inside them with their household counts.
class SamplingFrame {
 public:
  SamplingFrame() = default;
  // Validates: unique ids, households >= 1, every cluster in a known stratum,
  // every stratum non-empty.
  SamplingFrame(std::vector<Stratum> strata, std::vector<Cluster> clusters);

  const std::vector<Stratum>& strata() const noexcept { return strata_; }
  const std::vector<Cluster>& clusters() const noexcept { return clusters_; }
  // Area ids in order of first appearance among the strata.
  const std::vector<std::string>& areas() const noexcept { return areas_; }

  std::size_t area_index(const std::string& area_id) const;
  std::size_t stratum_index(const std::string& stratum_id) const;
  std::size_t stratum_of(std::size_t cluster) const { return cluster_stratum_[cluster]; }
  std::size_t area_of_stratum(std::size_t stratum) const { return stratum_area_[stratum]; }
  std::size_t area_of_cluster(std::size_t cluster) const { return stratum_area_[cluster_stratum_[cluster]]; }
  bool cluster_is_urban(std::size_t cluster) const { return strata_[cluster_stratum_[cluster]].urban; }
  const std::vector<std::size_t>& clusters_in_stratum(std::size_t stratum) const {
    return stratum_clusters_[stratum];
  }
  std::int64_t households_in_stratum(std::size_t stratum) const;

  // Urban households / all households, per area (indexed like areas()).
  std::vector<double> urban_fractions() const;

 private:
  std::vector<Stratum> strata_;
  std::vector<Cluster> clusters_;
  std::vector<std::string> areas_;
  std::vector<std::size_t> cluster_stratum_;
  std::vector<std::size_t> stratum_area_;
  std::vector<std::vector<std::size_t>> stratum_clusters_;
};

// Frame CSV: cluster_id,stratum_id,area_id,urban,households[,lon,lat]
SamplingFrame read_frame_csv(const std::filesystem::path& path);
void write_frame_csv(const SamplingFrame& frame, const std::filesystem::path& path);

// Synthetic frame: every area gets urban and rural strata with a fixed number
// of clusters and uniform household counts. Area k is laid out on a grid cell
// (column k % grid_cols, row k / grid_cols) of unit size in degrees and its
// cluster centroids are uniform inside that cell.
struct SyntheticFrameSpec {
  std::vector<std::string> areas;
  std::size_t urban_clusters_per_area = 4;
  std::size_t rural_clusters_per_area = 13;
  std::int64_t min_households = 80;
  std::int64_t max_households = 200;
  std::size_t grid_cols = 9;
  std::uint64_t seed = 1;
};

SamplingFrame synthesize_frame(const SyntheticFrameSpec& spec);

// Generative model for synthetic outcomes, on the logit scale:
//   p_ic = expit(intercept + x_i' beta + urban_ic * gamma + b_i + eps_c)
// with b the BYM2 combination of iid and scaled-ICAR effects and eps_c a
// cluster-level normal effect.
struct PopulationConfig {
  std::size_t areas = 0;
  SpatialStructure adjacency;
  double intercept = 0.0;
  double urban_log_odds = 0.0;
  double area_effect_sd = 0.0;
  double spatial_proportion = 0.0;
  double cluster_effect_sd = 0.0;
  std::vector<double> covariate_effects;
  // areas x covariate_effects.size(), rows in adjacency node order. Drawn
  // iid N(0, 1) when left empty.
  Eigen::MatrixXd area_covariates;
  int persons_per_household = 1;
  std::uint64_t seed = 0;
};

class FinitePopulation {
 public:
  const SamplingFrame& frame() const noexcept { return frame_; }
  int persons_per_household() const noexcept { return persons_per_household_; }
  // Area ids in adjacency order; truth/effects/covariates are aligned to it.
  const std::vector<std::string>& area_ids() const noexcept { return area_ids_; }
  std::size_t area_position(const std::string& area_id) const;

  // One 0/1 entry per person, grouped by household: person k of household h
  // sits at h * persons_per_household + k.
  const std::vector<std::uint8_t>& outcomes(std::size_t cluster) const { return outcomes_[cluster]; }
  double cluster_risk(std::size_t cluster) const { return cluster_risk_[cluster]; }

  const Eigen::VectorXd& area_effects() const noexcept { return area_effects_; }
  const Eigen::MatrixXd& area_covariates() const noexcept { return area_covariates_; }
  const std::vector<std::int64_t>& area_sizes() const noexcept { return area_sizes_; }
  const std::vector<std::int64_t>& area_positives() const noexcept { return area_positives_; }
  const std::vector<double>& truth() const noexcept { return truth_; }

 private:
  friend FinitePopulation generate_population(const SamplingFrame&, const PopulationConfig&);
  friend FinitePopulation read_population_csv(const SamplingFrame&, const std::filesystem::path&,
                                              const std::vector<std::string>&);
  void recompute_truth();

  SamplingFrame frame_;
  int persons_per_household_ = 1;
  std::vector<std::string> area_ids_;
  std::vector<std::size_t> frame_to_position_;
  std::vector<std::vector<std::uint8_t>> outcomes_;
  std::vector<double> cluster_risk_;
  Eigen::VectorXd area_effects_;
  Eigen::MatrixXd area_covariates_;
  std::vector<std::int64_t> area_sizes_;
  std::vector<std::int64_t> area_positives_;
  std::vector<double> truth_;
};

// Deterministic for a fixed config (seed included). Every random draw is
// consumed regardless of parameter values, so two configs that differ only in
// effect sizes share their random numbers. Throws ValidationError when the
// adjacency areas differ from the frame areas or parameters are out of range.
FinitePopulation generate_population(const SamplingFrame& frame, const PopulationConfig& config);

// (sum_k y_ik) / N_i for the named area.
double finite_population_mean(const FinitePopulation& population, const std::string& area_id);

// Household-level outcome file: cluster_id,household,persons,positives.
void write_population_csv(const FinitePopulation& population, const std::filesystem::path& path);
FinitePopulation read_population_csv(const SamplingFrame& frame, const std::filesystem::path& path,
                                     const std::vector<std::string>& area_order = {});
// area_id,N,positives,m
void write_truth_csv(const FinitePopulation& population, const std::filesystem::path& path);

double expit(double x) noexcept;
double logit(double p) noexcept;

}  // namespace sae
