#include "sae/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "sae/csv.hpp"
#include "sae/error.hpp"
#include "sae/rng.hpp"

namespace sae {

std::vector<std::size_t> pps_systematic(std::span<const double> sizes, std::size_t n, double start) {
  if (n == 0) throw ValidationError("pps_systematic: n must be >= 1");
  if (n > sizes.size()) throw ValidationError("pps_systematic: n exceeds the number of units");
  double total = 0.0;
  for (double s : sizes) {
    if (!(s > 0.0)) throw ValidationError("pps_systematic: sizes must be positive");
    total += s;
  }
  const double t = total / static_cast<double>(n);
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] > t) {
      throw ValidationError("certainty unit: unit " + std::to_string(i) + " has size " +
                            std::to_string(sizes[i]) + " > sampling interval " + std::to_string(t));
    }
  }
  if (!(start > 0.0 && start <= t)) throw ValidationError("pps_systematic: start must lie in (0, t]");
  std::vector<std::size_t> out;
  out.reserve(n);
  double upper = 0.0;  // T_i
  std::size_t i = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double point = start + static_cast<double>(j) * t;
    // Advance to the unit with T_{i-1} < point <= T_i.
    while (i < sizes.size() && upper + sizes[i] < point) upper += sizes[i++];
    if (i == sizes.size()) i = sizes.size() - 1;  // rounding at the far end
    out.push_back(i);
  }
  return out;
}

InclusionProbabilities inclusion_probability_two_stage(std::int64_t n_h, std::int64_t cluster_hh,
                                                       std::int64_t stratum_hh, std::int64_t n_hc) {
  if (n_h < 1 || cluster_hh < 1 || stratum_hh < 1 || n_hc < 1) {
    throw ValidationError("inclusion probabilities need positive counts");
  }
  if (n_hc > cluster_hh) throw ValidationError("second-stage take exceeds cluster size");
  if (n_h * cluster_hh > stratum_hh) {
    throw ValidationError("first-stage inclusion probability exceeds 1 (certainty unit)");
  }
  InclusionProbabilities p;
  p.first_stage = static_cast<double>(n_h * cluster_hh) / static_cast<double>(stratum_hh);
  p.second_stage = static_cast<double>(n_hc) / static_cast<double>(cluster_hh);
  p.overall = static_cast<double>(n_h * n_hc) / static_cast<double>(stratum_hh);
  return p;
}

SurveySample draw_two_stage(const FinitePopulation& population, const TwoStageDesign& design) {
  const SamplingFrame& frame = population.frame();
  const int pph = population.persons_per_household();
  Rng rng(design.seed);
  SurveySample sample;
  std::vector<std::string> cells;
  std::map<std::string, std::pair<std::int64_t, std::int64_t>> response;  // responded, selected

  for (std::size_t h = 0; h < frame.strata().size(); ++h) {
    const Stratum& stratum = frame.strata()[h];
    std::int64_t n_h = design.default_clusters_per_stratum;
    if (auto it = design.clusters_per_stratum.find(stratum.id); it != design.clusters_per_stratum.end()) {
      n_h = it->second;
    }
    if (n_h <= 0) throw ValidationError("no cluster take given for stratum '" + stratum.id + "'");
    std::vector<std::size_t> members = frame.clusters_in_stratum(h);
    if (design.randomize_order) {
      for (std::size_t k = members.size(); k > 1; --k) {
        std::swap(members[k - 1], members[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(k) - 1))]);
      }
    }
    if (static_cast<std::size_t>(n_h) > members.size()) {
      throw ValidationError("stratum '" + stratum.id + "' asks for " + std::to_string(n_h) +
                            " clusters but has only " + std::to_string(members.size()));
    }
    std::vector<double> sizes;
    for (std::size_t c : members) sizes.push_back(static_cast<double>(frame.clusters()[c].households));
    const std::int64_t stratum_hh = frame.households_in_stratum(h);
    const double t = static_cast<double>(stratum_hh) / static_cast<double>(n_h);
    double start = 0.0;
    if (design.integer_start) {
      const auto top = static_cast<std::int64_t>(std::floor(t));
      if (top < 1) throw ValidationError("integer random start needs a sampling interval >= 1");
      start = static_cast<double>(rng.uniform_int(1, top));
    } else {
      start = t * rng.uniform_open_closed();
    }
    double rate = 1.0;
    if (auto it = design.response_rates.find(stratum.id); it != design.response_rates.end()) {
      rate = it->second;
      if (!(rate > 0.0 && rate <= 1.0)) throw ValidationError("response rate must lie in (0, 1]");
    }
    for (std::size_t pick : pps_systematic(sizes, static_cast<std::size_t>(n_h), start)) {
      const std::size_t c = members[pick];
      const Cluster& cl = frame.clusters()[c];
      std::int64_t n_hc = design.households_per_cluster;
      if (auto it = design.households_per_cluster_override.find(cl.id);
          it != design.households_per_cluster_override.end()) {
        n_hc = it->second;
      }
      if (n_hc < 1 || n_hc > cl.households) {
        throw ValidationError("household take " + std::to_string(n_hc) + " invalid for cluster '" + cl.id +
                              "' with " + std::to_string(cl.households) + " households");
      }
      const auto probs = inclusion_probability_two_stage(n_h, cl.households, stratum_hh, n_hc);

      // SRS of households: partial Fisher-Yates over household indices.
      std::vector<std::int64_t> hh(static_cast<std::size_t>(cl.households));
      std::iota(hh.begin(), hh.end(), 0);
      for (std::int64_t k = 0; k < n_hc; ++k) {
        const auto j = rng.uniform_int(k, cl.households - 1);
        std::swap(hh[static_cast<std::size_t>(k)], hh[static_cast<std::size_t>(j)]);
      }
      SampleRow row;
      row.cluster_id = cl.id;
      row.stratum_id = stratum.id;
      row.area_id = stratum.area_id;
      row.urban = stratum.urban;
      row.n_selected = n_hc;
      row.pi1 = probs.first_stage;
      row.pi2 = probs.second_stage;
      row.design_weight = 1.0 / (probs.first_stage * probs.second_stage);
      row.adjusted_weight = row.design_weight;
      row.coordinates = cl.coordinates;
      const auto& y = population.outcomes(c);
      std::int64_t responded = 0;
      for (std::int64_t k = 0; k < n_hc; ++k) {
        const double u = rng.uniform();
        if (u >= rate) continue;
        ++responded;
        const auto base = static_cast<std::size_t>(hh[static_cast<std::size_t>(k)] * pph);
        for (int p = 0; p < pph; ++p) row.y_positive += y[base + static_cast<std::size_t>(p)];
      }
      row.n_tested = responded * pph;
      auto& [resp, sel] = response[stratum.id];
      resp += responded;
      sel += n_hc;
      cells.push_back(stratum.id);
      sample.rows.push_back(std::move(row));
    }
  }
  if (design.response_rates.empty()) return sample;
  std::map<std::string, double> observed;
  for (const auto& [cell, counts] : response) {
    // A cell with no respondents contributes no data; leave its weights alone.
    observed[cell] = counts.first > 0 ? static_cast<double>(counts.first) / static_cast<double>(counts.second) : 1.0;
  }
  return adjust_nonresponse(std::move(sample), cells, observed);
}

SurveySample adjust_nonresponse(SurveySample sample, std::span<const std::string> cells,
                                const std::map<std::string, double>& rates) {
  if (cells.size() != sample.rows.size()) throw ValidationError("adjust_nonresponse: one cell id per row required");
  for (std::size_t r = 0; r < sample.rows.size(); ++r) {
    const auto it = rates.find(cells[r]);
    if (it == rates.end()) throw ValidationError("no response rate for cell '" + cells[r] + "'");
    if (!(it->second > 0.0 && it->second <= 1.0)) {
      throw ValidationError("response rate for cell '" + cells[r] + "' must lie in (0, 1]");
    }
    sample.rows[r].adjusted_weight = sample.rows[r].design_weight / it->second;
  }
  return sample;
}

SurveySample poststratify(SurveySample sample, std::span<const std::string> groups,
                          const std::map<std::string, double>& totals) {
  if (groups.size() != sample.rows.size()) throw ValidationError("poststratify: one group id per row required");
  std::map<std::string, double> current;
  for (std::size_t r = 0; r < sample.rows.size(); ++r) {
    current[groups[r]] += sample.rows[r].adjusted_weight * static_cast<double>(sample.rows[r].n_tested);
  }
  for (const auto& [group, total] : totals) {
    if (!(total > 0.0)) throw ValidationError("known total for group '" + group + "' must be positive");
    const auto it = current.find(group);
    if (it == current.end() || !(it->second > 0.0)) {
      throw ValidationError("post-stratification group '" + group + "' is empty in the sample");
    }
  }
  for (std::size_t r = 0; r < sample.rows.size(); ++r) {
    const auto it = totals.find(groups[r]);
    if (it == totals.end()) throw ValidationError("no known total for group '" + groups[r] + "'");
    sample.rows[r].adjusted_weight *= it->second / current[groups[r]];
  }
  return sample;
}

WeightVariation weight_cv_deff(std::span<const double> weights) {
  if (weights.size() < 2) throw ValidationError("weight_cv_deff needs at least two weights");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw ValidationError("weights must be positive");
    sum += w;
  }
  const double n = static_cast<double>(weights.size());
  const double mean = sum / n;
  double ss = 0.0;
  for (double w : weights) ss += (w - mean) * (w - mean);
  WeightVariation out;
  out.cv = std::sqrt(ss / n) / mean;
  out.deff = 1.0 + out.cv * out.cv;
  return out;
}

std::vector<std::size_t> adaptive_cluster_sample(std::span<const double> counts,
                                                 const std::vector<std::vector<std::size_t>>& adjacency,
                                                 std::span<const std::size_t> initial, double threshold) {
  if (adjacency.size() != counts.size()) throw ValidationError("adaptive sample: counts/adjacency size mismatch");
  std::vector<bool> in(counts.size(), false);
  std::vector<std::size_t> frontier;
  for (std::size_t c : initial) {
    if (c >= counts.size()) throw ValidationError("adaptive sample: initial cluster out of range");
    if (!in[c]) {
      in[c] = true;
      frontier.push_back(c);
    }
  }
  while (!frontier.empty()) {
    const std::size_t c = frontier.back();
    frontier.pop_back();
    if (!(counts[c] > threshold)) continue;
    for (std::size_t nb : adjacency[c]) {
      if (nb >= counts.size()) throw ValidationError("adaptive sample: neighbour index out of range");
      if (!in[nb]) {
        in[nb] = true;
        frontier.push_back(nb);
      }
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < in.size(); ++c) {
    if (in[c]) out.push_back(c);
  }
  return out;
}

void write_sample_csv(const SurveySample& sample, const std::filesystem::path& path) {
  csv::Writer w(path, {"cluster_id", "stratum_id", "area_id", "urban", "n_selected", "n_tested", "y_positive",
                       "pi1", "pi2", "design_weight", "adjusted_weight", "lon", "lat"});
  for (const auto& r : sample.rows) {
    w.cell(r.cluster_id).cell(r.stratum_id).cell(r.area_id).cell(r.urban ? 1 : 0);
    w.cell(r.n_selected).cell(r.n_tested).cell(r.y_positive);
    w.cell(r.pi1).cell(r.pi2).cell(r.design_weight).cell(r.adjusted_weight);
    if (r.coordinates) {
      w.cell(r.coordinates->lon).cell(r.coordinates->lat);
    } else {
      w.cell(std::string_view{}).cell(std::string_view{});
    }
    w.end_row();
  }
}

SurveySample read_sample_csv(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  if (t.rows() == 0) throw ValidationError(path.string() + ": sample file has no rows");
  auto opt = [&](std::size_t r, const char* col) -> std::optional<double> {
    return t.has_column(col) ? t.optional_number(r, col) : std::nullopt;
  };
  SurveySample s;
  std::vector<std::string> problems;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    SampleRow row;
    row.area_id = t.text(r, "area_id");
    row.cluster_id = t.has_column("cluster_id") ? t.text(r, "cluster_id") : "row" + std::to_string(r + 1);
    row.stratum_id = t.has_column("stratum_id") ? t.text(r, "stratum_id") : row.area_id;
    row.urban = t.has_column("urban") ? t.flag(r, "urban") : false;
    row.n_tested = t.integer(r, "n_tested");
    row.y_positive = t.integer(r, "y_positive");
    row.n_selected = t.has_column("n_selected") ? t.integer(r, "n_selected") : row.n_tested;
    row.pi1 = opt(r, "pi1").value_or(1.0);
    row.pi2 = opt(r, "pi2").value_or(1.0);
    row.design_weight = opt(r, "design_weight").value_or(1.0 / (row.pi1 * row.pi2));
    row.adjusted_weight = opt(r, "adjusted_weight").value_or(row.design_weight);
    const auto lon = opt(r, "lon");
    const auto lat = opt(r, "lat");
    if (lon && lat) row.coordinates = Coordinates{*lon, *lat};
    const std::string where = "line " + std::to_string(t.line_of(r));
    if (row.area_id.empty()) problems.push_back(where + ": empty area_id");
    if (row.n_tested < 0 || row.y_positive < 0 || row.y_positive > row.n_tested) {
      problems.push_back(where + ": need 0 <= y_positive <= n_tested");
    }
    if (!(row.pi1 > 0.0 && row.pi1 <= 1.0 && row.pi2 > 0.0 && row.pi2 <= 1.0)) {
      problems.push_back(where + ": inclusion probabilities must lie in (0, 1]");
    }
    if (!(row.design_weight > 0.0 && row.adjusted_weight > 0.0)) {
      problems.push_back(where + ": weights must be positive");
    }
    s.rows.push_back(std::move(row));
  }
  if (!problems.empty()) {
    std::string msg = path.string() + ": invalid rows:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ValidationError(msg);
  }
  return s;
}

}  // namespace sae
