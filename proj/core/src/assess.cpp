#include "sae/assess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sae/csv.hpp"
#include "sae/error.hpp"
#include "sae/population.hpp"
#include "sae/rng.hpp"

namespace sae {

double CvReport::coverage() const {
  if (records.empty()) return std::nan("");
  const auto hits = std::count_if(records.begin(), records.end(), [](const CvRecord& r) { return r.covered; });
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

double CvReport::mean_discrepancy() const {
  if (records.empty()) return std::nan("");
  double s = 0.0;
  for (const auto& r : records) s += r.discrepancy;
  return s / static_cast<double>(records.size());
}

namespace {

std::string comparator_problem(const AreaEstimate* e) {
  if (e == nullptr || e->has_flag("no_sample")) return "no direct estimate";
  if (e->has_flag("boundary")) return "boundary direct estimate";
  if (e->has_flag("zero_variance")) return "zero design variance";
  if (!e->usable()) return "direct variance not estimable";
  return {};
}

template <typename Spec, typename Fit>
CvReport run_loo(const Spec& model, const AreaDirectEstimates& direct, const LooOptions& options, Fit fit_fn) {
  if (!(options.level > 0.0 && options.level < 1.0)) throw ValidationError("interval level must be in (0, 1)");
  std::size_t usable = 0;
  for (const auto& a : direct.areas) usable += a.usable() ? 1 : 0;
  if (usable < 3) throw ValidationError("leave-one-out needs at least 3 areas with direct estimates");

  std::vector<std::string> targets = options.areas;
  if (targets.empty()) targets = model.structure.nodes();
  CvReport report;
  const double tail = 0.5 * (1.0 - options.level);
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const std::string& id = targets[k];
    if (!model.structure.contains(id)) throw ValidationError("area '" + id + "' is not in the adjacency graph");
    const AreaEstimate* e = direct.find(id);
    if (const std::string why = comparator_problem(e); !why.empty()) {
      report.excluded.push_back(id + ": " + why);
      continue;
    }
    Spec spec = model;
    spec.held_out = {id};
    spec.mcmc.seed = derive_seed(options.seed, k);
    try {
      const AreaModelFit fit = fit_fn(spec);
      const auto col = static_cast<Eigen::Index>(model.structure.index_of(id));
      Rng rng(derive_seed(spec.mcmc.seed, 0x6c6f6fULL));
      const double V = *e->logit_var;
      const Eigen::Index draws = fit.prevalence.rows();
      std::vector<double> latent(static_cast<std::size_t>(draws));
      std::vector<double> pred(static_cast<std::size_t>(draws));
      for (Eigen::Index r = 0; r < draws; ++r) {
        latent[static_cast<std::size_t>(r)] = logit(fit.prevalence(r, col));
        pred[static_cast<std::size_t>(r)] = latent[static_cast<std::size_t>(r)] + std::sqrt(V) * rng.normal();
      }
      const Summary lat = summarize(latent, options.level);
      CvRecord rec;
      rec.area_id = id;
      rec.direct_est = *e->est;
      rec.direct_se = std::sqrt(*e->var);
      rec.logit_direct = *e->logit_est;
      rec.logit_var = V;
      rec.model_var = lat.sd * lat.sd;
      const double lo = quantile(pred, tail);
      const double hi = quantile(pred, 1.0 - tail);
      rec.pred_median = expit(quantile(pred, 0.5));
      rec.pred_lower = expit(lo);
      rec.pred_upper = expit(hi);
      rec.discrepancy = (lat.median - rec.logit_direct) / std::sqrt(V + rec.model_var);
      rec.covered = lo <= rec.logit_direct && rec.logit_direct <= hi;
      report.records.push_back(rec);
    } catch (const std::exception& ex) {
      report.failures.push_back(id + ": " + ex.what());
    }
  }
  return report;
}

}  // namespace

CvReport loo_area_cv(const SmoothedDirectSpec& model, const AreaDirectEstimates& direct, const LooOptions& options) {
  return run_loo(model, direct, options, [](const SmoothedDirectSpec& s) { return fit_smoothed_direct(s); });
}

CvReport loo_area_cv(const BetaBinomialSpec& model, const AreaDirectEstimates& direct, const LooOptions& options) {
  return run_loo(model, direct, options, [](const BetaBinomialSpec& s) { return fit_betabinomial(s); });
}

void write_cv_csv(const std::filesystem::path& path, const CvReport& report) {
  csv::Writer w(path, {"area_id", "direct_est", "direct_se", "Z", "V_logit", "pred_median", "pred_low", "pred_high",
                       "pred_var_logit", "discrepancy", "covered"});
  for (const auto& r : report.records) {
    w.cell(r.area_id).cell(r.direct_est).cell(r.direct_se).cell(r.logit_direct).cell(r.logit_var).cell(r.pred_median);
    w.cell(r.pred_lower).cell(r.pred_upper).cell(r.model_var).cell(r.discrepancy).cell(r.covered ? 1 : 0);
    w.end_row();
  }
}

std::vector<AreaRank> rank_areas(const Eigen::MatrixXd& prevalence_draws, const std::vector<std::string>& area_ids,
                                 double level) {
  if (static_cast<std::size_t>(prevalence_draws.cols()) != area_ids.size()) {
    throw ValidationError("one draw column per area required");
  }
  std::vector<std::size_t> order(area_ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return area_ids[a] < area_ids[b]; });
  Eigen::MatrixXd sorted(prevalence_draws.rows(), prevalence_draws.cols());
  for (std::size_t j = 0; j < order.size(); ++j) {
    sorted.col(static_cast<Eigen::Index>(j)) = prevalence_draws.col(static_cast<Eigen::Index>(order[j]));
  }
  const auto rs = rank_distribution(sorted, level);
  std::vector<AreaRank> out(area_ids.size());
  for (std::size_t j = 0; j < order.size(); ++j) {
    out[order[j]] = {area_ids[order[j]], rs[j].median, rs[j].lower, rs[j].upper};
  }
  return out;
}

void write_rank_csv(const std::filesystem::path& path, const std::vector<AreaRank>& ranks) {
  csv::Writer w(path, {"area_id", "rank_median", "rank_low", "rank_high"});
  for (const auto& r : ranks) w.cell(r.area_id).cell(r.median).cell(r.lower).cell(r.upper).end_row();
}

}  // namespace sae
