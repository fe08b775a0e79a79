#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sae/arealevel.hpp"
#include "sae/direct.hpp"
#include "sae/summary.hpp"
#include "sae/unitlevel.hpp"

namespace sae {

// One held-out area. Predictions are for the direct estimate itself: model
// draws of the area's logit prevalence plus N(0, V_i) sampling noise.
struct CvRecord {
  std::string area_id;
  double direct_est = 0.0;
  double direct_se = 0.0;
  double logit_direct = 0.0;
  double logit_var = 0.0;
  double pred_median = 0.0;  // probability scale
  double pred_lower = 0.0;
  double pred_upper = 0.0;
  double model_var = 0.0;    // posterior variance of the logit prevalence
  double discrepancy = 0.0;  // (median - Z) / sqrt(V + model_var), logit scale
  bool covered = false;
};

struct CvReport {
  std::vector<CvRecord> records;
  std::vector<std::string> excluded;  // "id: reason", areas without a usable comparator
  std::vector<std::string> failures;  // "id: message", refits that threw

  double coverage() const;
  double mean_discrepancy() const;
};

struct LooOptions {
  double level = 0.9;
  std::uint64_t seed = 1;  // area k refits with derive_seed(seed, k)
  // Areas to hold out, empty means every area with a usable direct estimate.
  std::vector<std::string> areas;
};

// Leave-one-area-out against design-based direct estimates. `direct` supplies
// the comparators; the model spec is refit once per held-out area.
CvReport loo_area_cv(const SmoothedDirectSpec& model, const AreaDirectEstimates& direct, const LooOptions& options);
CvReport loo_area_cv(const BetaBinomialSpec& model, const AreaDirectEstimates& direct, const LooOptions& options);

void write_cv_csv(const std::filesystem::path& path, const CvReport& report);

struct AreaRank {
  std::string area_id;
  double median = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

// Rank 1 is the lowest prevalence. Ties go to the smaller area id.
std::vector<AreaRank> rank_areas(const Eigen::MatrixXd& prevalence_draws, const std::vector<std::string>& area_ids,
                                 double level = 0.9);

void write_rank_csv(const std::filesystem::path& path, const std::vector<AreaRank>& ranks);

}  // namespace sae
