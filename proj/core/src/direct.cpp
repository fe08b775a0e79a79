#include "sae/direct.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "sae/csv.hpp"
#include "sae/error.hpp"

namespace sae {

double ht_estimate(std::span<const double> y, std::span<const double> w) {
  if (y.empty()) throw ValidationError("no data in domain");
  if (y.size() != w.size()) throw ValidationError("ht_estimate: y and w lengths differ");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (!(w[k] > 0.0)) throw ValidationError("ht_estimate: weights must be positive");
    num += w[k] * y[k];
    den += w[k];
  }
  return num / den;
}

double hajek_ratio(std::span<const PsuTotals> psus) {
  double num = 0.0;
  double den = 0.0;
  for (const auto& p : psus) {
    num += p.weight * p.positives;
    den += p.weight * p.tested;
  }
  if (!(den > 0.0)) throw ValidationError("no data in domain");
  return num / den;
}

namespace {

double pooled_jackknife(std::span<const PsuTotals> psus) {
  const std::size_t k = psus.size();
  double num = 0.0;
  double den = 0.0;
  for (const auto& p : psus) {
    num += p.weight * p.positives;
    den += p.weight * p.tested;
  }
  std::vector<double> theta(k);
  double mean = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    const double d = den - psus[j].weight * psus[j].tested;
    if (!(d > 0.0)) throw ValidationError("variance not estimable: a replicate has no tested individuals");
    theta[j] = (num - psus[j].weight * psus[j].positives) / d;
    mean += theta[j];
  }
  mean /= static_cast<double>(k);
  double ss = 0.0;
  for (double t : theta) ss += (t - mean) * (t - mean);
  return ss * static_cast<double>(k - 1) / static_cast<double>(k);
}

}  // namespace

JackknifeResult jackknife_variance(std::span<const PsuTotals> psus) {
  if (psus.size() < 2) throw ValidationError("variance not estimable: fewer than two clusters");
  std::map<std::string, std::vector<std::size_t>> strata;
  for (std::size_t j = 0; j < psus.size(); ++j) strata[psus[j].stratum_id].push_back(j);
  const bool singleton = std::any_of(strata.begin(), strata.end(), [](const auto& s) { return s.second.size() < 2; });
  if (strata.size() == 1 || singleton) return {pooled_jackknife(psus), singleton};

  double num = 0.0;
  double den = 0.0;
  std::map<std::string, std::pair<double, double>> stratum_totals;
  for (const auto& p : psus) {
    num += p.weight * p.positives;
    den += p.weight * p.tested;
    auto& t = stratum_totals[p.stratum_id];
    t.first += p.weight * p.positives;
    t.second += p.weight * p.tested;
  }
  double v = 0.0;
  for (const auto& [id, members] : strata) {
    const auto kh = static_cast<double>(members.size());
    const double scale = kh / (kh - 1.0);
    const auto [sn, sd] = stratum_totals[id];
    std::vector<double> theta;
    double mean = 0.0;
    for (std::size_t j : members) {
      const double wn = psus[j].weight * psus[j].positives;
      const double wd = psus[j].weight * psus[j].tested;
      const double rn = num - sn + scale * (sn - wn);
      const double rd = den - sd + scale * (sd - wd);
      if (!(rd > 0.0)) throw ValidationError("variance not estimable: a replicate has no tested individuals");
      theta.push_back(rn / rd);
      mean += theta.back();
    }
    mean /= kh;
    double ss = 0.0;
    for (double t : theta) ss += (t - mean) * (t - mean);
    v += (kh - 1.0) / kh * ss;
  }
  return {v, false};
}

LogitEstimate logit_transform(double est, double var) {
  if (!(est > 0.0 && est < 1.0)) {
    throw ValidationError("boundary estimate " + csv::format(est) + ": logit undefined");
  }
  if (!(var >= 0.0) || !std::isfinite(var)) throw ValidationError("logit_transform: variance must be finite and >= 0");
  const double d = est * (1.0 - est);
  return {std::log(est / (1.0 - est)), var / (d * d)};
}

double binomial_variance(double p, double n) {
  if (!(n > 0.0)) throw ValidationError("binomial_variance: n must be positive");
  return p * (1.0 - p) / n;
}

bool AreaEstimate::has_flag(const std::string& f) const {
  return std::find(flags.begin(), flags.end(), f) != flags.end();
}

const AreaEstimate* AreaDirectEstimates::find(const std::string& area_id) const {
  for (const auto& a : areas) {
    if (a.area_id == area_id) return &a;
  }
  return nullptr;
}

namespace {

PsuTotals totals_of(const SampleRow& r) {
  return {r.stratum_id, r.adjusted_weight, static_cast<double>(r.n_tested), static_cast<double>(r.y_positive)};
}

AreaEstimate estimate_domain(const std::string& label, const std::vector<const SampleRow*>& rows,
                             DirectVariance method) {
  AreaEstimate out;
  out.area_id = label;
  std::vector<PsuTotals> psus;
  for (const SampleRow* r : rows) {
    out.n += r->n_tested;
    if (r->n_tested > 0) psus.push_back(totals_of(*r));
  }
  out.clusters = static_cast<std::int64_t>(psus.size());
  if (psus.empty()) {
    out.flags.push_back("no_sample");
    return out;
  }
  out.est = hajek_ratio(psus);
  if (method == DirectVariance::binomial) {
    // Kish effective sample size over individuals.
    double sw = 0.0;
    double sw2 = 0.0;
    for (const auto& p : psus) {
      sw += p.weight * p.tested;
      sw2 += p.weight * p.weight * p.tested;
    }
    out.var = binomial_variance(*out.est, sw * sw / sw2);
  } else if (psus.size() < 2) {
    out.flags.push_back("variance_not_estimable");
  } else {
    const auto jk = jackknife_variance(psus);
    out.var = jk.variance;
    if (jk.strata_pooled) out.flags.push_back("strata_pooled");
  }
  if (out.var && *out.var <= 1e-12 * *out.est * (1.0 - *out.est)) {
    // Rounding residue of an exactly-zero replicate spread.
    out.var = 0.0;
    out.flags.push_back("zero_variance");
  }
  if (*out.est <= 0.0 || *out.est >= 1.0) {
    out.flags.push_back("boundary");
  } else if (out.var) {
    const auto lt = logit_transform(*out.est, *out.var);
    out.logit_est = lt.z;
    out.logit_var = lt.v;
  }
  return out;
}

}  // namespace

AreaDirectEstimates direct_by_area(const SurveySample& sample, std::span<const std::string> area_order,
                                   DirectVariance method) {
  std::vector<std::string> order(area_order.begin(), area_order.end());
  std::map<std::string, std::vector<const SampleRow*>> by_area;
  for (const auto& r : sample.rows) {
    auto [it, inserted] = by_area.try_emplace(r.area_id);
    if (inserted && std::find(order.begin(), order.end(), r.area_id) == order.end()) order.push_back(r.area_id);
    it->second.push_back(&r);
  }
  AreaDirectEstimates out;
  for (const auto& id : order) {
    const auto it = by_area.find(id);
    out.areas.push_back(estimate_domain(id, it == by_area.end() ? std::vector<const SampleRow*>{} : it->second,
                                        method));
  }
  return out;
}

AreaEstimate direct_pooled(const SurveySample& sample, const std::string& label, DirectVariance method) {
  std::vector<const SampleRow*> rows;
  for (const auto& r : sample.rows) rows.push_back(&r);
  return estimate_domain(label, rows, method);
}

void write_direct_csv(const AreaDirectEstimates& estimates, const std::filesystem::path& path) {
  csv::Writer w(path, {"area_id", "est", "se", "var", "n", "clusters", "Z", "V_logit", "flags"});
  for (const auto& a : estimates.areas) {
    std::string flags;
    for (const auto& f : a.flags) flags += (flags.empty() ? "" : ";") + f;
    std::optional<double> se;
    if (a.var) se = std::sqrt(*a.var);
    w.cell(a.area_id).cell(a.est).cell(se).cell(a.var).cell(a.n).cell(a.clusters);
    w.cell(a.logit_est).cell(a.logit_var).cell(flags);
    w.end_row();
  }
}

AreaDirectEstimates read_direct_csv(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  AreaDirectEstimates out;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    AreaEstimate a;
    a.area_id = t.text(r, "area_id");
    a.est = t.optional_number(r, "est");
    a.var = t.optional_number(r, "var");
    a.n = t.has_column("n") ? t.integer(r, "n") : 0;
    a.clusters = t.has_column("clusters") ? t.integer(r, "clusters") : 0;
    a.logit_est = t.optional_number(r, "Z");
    a.logit_var = t.optional_number(r, "V_logit");
    if (a.logit_est.has_value() != a.logit_var.has_value()) {
      throw ValidationError(path.string() + " line " + std::to_string(t.line_of(r)) +
                            ": Z and V_logit must be given together");
    }
    if (a.logit_var && !(*a.logit_var >= 0.0 && std::isfinite(*a.logit_var))) {
      throw ValidationError(path.string() + " line " + std::to_string(t.line_of(r)) + ": V_logit must be finite and >= 0");
    }
    if (t.has_column("flags")) {
      std::string f = t.text(r, "flags");
      std::size_t pos = 0;
      while (!f.empty() && pos <= f.size()) {
        const auto next = f.find(';', pos);
        a.flags.push_back(f.substr(pos, next == std::string::npos ? std::string::npos : next - pos));
        if (next == std::string::npos) break;
        pos = next + 1;
      }
    }
    out.areas.push_back(std::move(a));
  }
  return out;
}

}  // namespace sae
