#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sae/sampling.hpp"

namespace sae {

// Hajek weighted mean sum(w y) / sum(w). Throws "no data in domain" on empty input.
double ht_estimate(std::span<const double> y, std::span<const double> w);

// One sampled PSU: weighted totals over its tested individuals.
struct PsuTotals {
  std::string stratum_id;
  double weight = 1.0;      // per-person weight, constant within the PSU
  double tested = 0.0;      // n_c
  double positives = 0.0;   // Y_c
};

double hajek_ratio(std::span<const PsuTotals> psus);

struct JackknifeResult {
  double variance = 0.0;
  // Some stratum held a single PSU, so strata were pooled and the plain
  // delete-one-PSU jackknife over the whole area was used instead.
  bool strata_pooled = false;
};

// Delete-one-PSU jackknife of the Hajek ratio, PSUs treated as drawn with
// replacement within strata. Deleting PSU k of stratum h rescales the other
// PSUs of h by K_h / (K_h - 1), and V = sum_h (K_h-1)/K_h sum_k (theta_(hk) - mean_h)^2.
// With one stratum this is the ordinary ((K-1)/K) sum_k (theta_(k) - mean)^2.
// Throws "variance not estimable" with fewer than two PSUs.
JackknifeResult jackknife_variance(std::span<const PsuTotals> psus);

struct LogitEstimate {
  double z = 0.0;
  double v = 0.0;
};

// Z = logit(est), V = var / (est (1 - est))^2. Throws ValidationError on a boundary estimate.
LogitEstimate logit_transform(double est, double var);

double binomial_variance(double p, double n);

enum class DirectVariance {
  jackknife,
  binomial,  // p(1-p)/n_eff with Kish effective size
};

struct AreaEstimate {
  std::string area_id;
  std::optional<double> est;
  std::optional<double> var;
  std::int64_t n = 0;         // individuals tested
  std::int64_t clusters = 0;
  std::optional<double> logit_est;
  std::optional<double> logit_var;
  std::vector<std::string> flags;  // no_sample, variance_not_estimable, strata_pooled, zero_variance, boundary

  bool has_flag(const std::string& f) const;
  // Usable as an observation in the logit-scale area model.
  bool usable() const { return logit_est.has_value() && logit_var.has_value() && *logit_var > 0.0; }
};

struct AreaDirectEstimates {
  std::vector<AreaEstimate> areas;

  const AreaEstimate* find(const std::string& area_id) const;
};

// Per-area Hajek estimate with variance. Output order follows `area_order`
// (areas without sample get a `no_sample` record); sampled areas missing from
// `area_order` are appended in order of first appearance.
AreaDirectEstimates direct_by_area(const SurveySample& sample, std::span<const std::string> area_order = {},
                                   DirectVariance method = DirectVariance::jackknife);

// Pooled estimate over every row of the sample (a single domain).
AreaEstimate direct_pooled(const SurveySample& sample, const std::string& label,
                           DirectVariance method = DirectVariance::jackknife);

// Columns: area_id,est,se,var,n,clusters,Z,V_logit,flags (flags joined by ';').
void write_direct_csv(const AreaDirectEstimates& estimates, const std::filesystem::path& path);
AreaDirectEstimates read_direct_csv(const std::filesystem::path& path);

}  // namespace sae
