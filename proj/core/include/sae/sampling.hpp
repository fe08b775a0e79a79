#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sae/population.hpp"

namespace sae {

// Linear systematic PPS. Units occupy consecutive intervals (T_{i-1}, T_i] of
// length sizes[i]; with t = T_m / n, unit i is selected for every j in
// 0..n-1 with T_{i-1} < start + j t <= T_i. Returns 0-based indices in
// selection order. Throws ValidationError("certainty unit ...") when any size
// exceeds t, and for n == 0, n > units, or start outside (0, t].
std::vector<std::size_t> pps_systematic(std::span<const double> sizes, std::size_t n, double start);

struct InclusionProbabilities {
  double first_stage = 0.0;   // n_h N_hc / N_h
  double second_stage = 0.0;  // n_hc / N_hc
  double overall = 0.0;       // n_h n_hc / N_h
};

InclusionProbabilities inclusion_probability_two_stage(std::int64_t clusters_sampled,
                                                       std::int64_t cluster_households,
                                                       std::int64_t stratum_households,
                                                       std::int64_t households_sampled);

// Stratified two-stage design: n_h clusters per stratum by linear systematic
// PPS on household counts, then an SRS of n_hc households per cluster.
struct TwoStageDesign {
  std::map<std::string, std::int64_t> clusters_per_stratum;  // n_h by stratum id
  std::int64_t default_clusters_per_stratum = 0;             // 0: every stratum must be listed
  std::int64_t households_per_cluster = 20;                  // constant n_hc
  std::map<std::string, std::int64_t> households_per_cluster_override;  // by cluster id
  // Household response probability per stratum (the adjustment cell). Absent
  // strata respond fully.
  std::map<std::string, double> response_rates;
  // Draw the random start as an integer in 1..floor(t) instead of a real in (0, t].
  bool integer_start = false;
  // Shuffle each stratum's cluster list before the systematic pass
  // (randomized systematic PPS). Off: frame order is used as listed.
  bool randomize_order = false;
  std::uint64_t seed = 0;
};

struct SampleRow {
  std::string cluster_id;
  std::string stratum_id;
  std::string area_id;
  bool urban = false;
  std::int64_t n_selected = 0;  // households drawn at stage two
  std::int64_t n_tested = 0;    // responding individuals
  std::int64_t y_positive = 0;
  double pi1 = 1.0;
  double pi2 = 1.0;
  double design_weight = 1.0;   // 1 / (pi1 * pi2)
  double adjusted_weight = 1.0;
  std::optional<Coordinates> coordinates;
};

struct SurveySample {
  std::vector<SampleRow> rows;
};

// Deterministic given design.seed. Observed per-stratum response rates feed
// adjust_nonresponse when design.response_rates is non-empty.
SurveySample draw_two_stage(const FinitePopulation& population, const TwoStageDesign& design);

// adjusted_weight = design_weight / rate(cell). `cells` holds one cell id per row.
SurveySample adjust_nonresponse(SurveySample sample, std::span<const std::string> cells,
                                const std::map<std::string, double>& response_rates);

// Scales adjusted weights within each group so the estimated group total
// sum(adjusted_weight * n_tested) equals the known total.
SurveySample poststratify(SurveySample sample, std::span<const std::string> groups,
                          const std::map<std::string, double>& known_totals);

struct WeightVariation {
  double cv = 0.0;    // population SD / mean
  double deff = 1.0;  // 1 + cv^2
};

WeightVariation weight_cv_deff(std::span<const double> weights);

// Adaptive cluster sampling closure: starting from `initial`, every included
// cluster whose count is strictly greater than `threshold` brings in all its
// neighbours; repeated to a fixpoint. Result is sorted and contains `initial`.
std::vector<std::size_t> adaptive_cluster_sample(std::span<const double> counts,
                                                 const std::vector<std::vector<std::size_t>>& adjacency,
                                                 std::span<const std::size_t> initial, double threshold);

// Sample CSV: cluster_id,stratum_id,area_id,urban,n_selected,n_tested,y_positive,
// pi1,pi2,design_weight,adjusted_weight,lon,lat. On read only area_id,
// n_tested and y_positive are required; the rest default to an equal-weight
// single-stratum design.
void write_sample_csv(const SurveySample& sample, const std::filesystem::path& path);
SurveySample read_sample_csv(const std::filesystem::path& path);

}  // namespace sae
