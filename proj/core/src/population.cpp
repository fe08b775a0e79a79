#include "sae/population.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "sae/csv.hpp"
#include "sae/error.hpp"
#include "sae/rng.hpp"

namespace sae {

double expit(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) noexcept { return std::log(p / (1.0 - p)); }

SamplingFrame::SamplingFrame(std::vector<Stratum> strata, std::vector<Cluster> clusters)
    : strata_(std::move(strata)), clusters_(std::move(clusters)) {
  std::map<std::string, std::size_t> stratum_ids;
  std::map<std::string, std::size_t> area_ids;
  for (std::size_t h = 0; h < strata_.size(); ++h) {
    if (!stratum_ids.emplace(strata_[h].id, h).second) {
      throw ValidationError("duplicate stratum id '" + strata_[h].id + "'");
    }
    auto [it, inserted] = area_ids.emplace(strata_[h].area_id, areas_.size());
    if (inserted) areas_.push_back(strata_[h].area_id);
    stratum_area_.push_back(it->second);
  }
  stratum_clusters_.assign(strata_.size(), {});
  std::set<std::string> cluster_ids;
  for (std::size_t c = 0; c < clusters_.size(); ++c) {
    const Cluster& cl = clusters_[c];
    if (!cluster_ids.insert(cl.id).second) throw ValidationError("duplicate cluster id '" + cl.id + "'");
    if (cl.households < 1) throw ValidationError("cluster '" + cl.id + "' has fewer than one household");
    const auto it = stratum_ids.find(cl.stratum_id);
    if (it == stratum_ids.end()) {
      throw ValidationError("cluster '" + cl.id + "' refers to unknown stratum '" + cl.stratum_id + "'");
    }
    cluster_stratum_.push_back(it->second);
    stratum_clusters_[it->second].push_back(c);
  }
  for (std::size_t h = 0; h < strata_.size(); ++h) {
    if (stratum_clusters_[h].empty()) throw ValidationError("stratum '" + strata_[h].id + "' has no clusters");
  }
}

std::size_t SamplingFrame::area_index(const std::string& area_id) const {
  const auto it = std::find(areas_.begin(), areas_.end(), area_id);
  if (it == areas_.end()) throw ValidationError("unknown area '" + area_id + "'");
  return static_cast<std::size_t>(it - areas_.begin());
}

std::size_t SamplingFrame::stratum_index(const std::string& stratum_id) const {
  for (std::size_t h = 0; h < strata_.size(); ++h) {
    if (strata_[h].id == stratum_id) return h;
  }
  throw ValidationError("unknown stratum '" + stratum_id + "'");
}

std::int64_t SamplingFrame::households_in_stratum(std::size_t stratum) const {
  std::int64_t total = 0;
  for (std::size_t c : stratum_clusters_[stratum]) total += clusters_[c].households;
  return total;
}

std::vector<double> SamplingFrame::urban_fractions() const {
  std::vector<double> urban(areas_.size(), 0.0);
  std::vector<double> total(areas_.size(), 0.0);
  for (std::size_t c = 0; c < clusters_.size(); ++c) {
    const std::size_t a = area_of_cluster(c);
    const auto hh = static_cast<double>(clusters_[c].households);
    total[a] += hh;
    if (cluster_is_urban(c)) urban[a] += hh;
  }
  for (std::size_t a = 0; a < urban.size(); ++a) urban[a] /= total[a];
  return urban;
}

SamplingFrame read_frame_csv(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  const bool has_coords = t.has_column("lon") && t.has_column("lat");
  std::vector<Stratum> strata;
  std::map<std::string, std::size_t> seen;
  std::vector<Cluster> clusters;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    Stratum s{t.text(r, "stratum_id"), t.text(r, "area_id"), t.flag(r, "urban")};
    if (auto it = seen.find(s.id); it != seen.end()) {
      const Stratum& prev = strata[it->second];
      if (prev.area_id != s.area_id || prev.urban != s.urban) {
        throw ValidationError(path.string() + " line " + std::to_string(t.line_of(r)) + ": stratum '" +
                              s.id + "' has inconsistent area/urban values");
      }
    } else {
      seen.emplace(s.id, strata.size());
      strata.push_back(s);
    }
    Cluster c{t.text(r, "cluster_id"), s.id, t.integer(r, "households"), std::nullopt};
    if (has_coords) {
      const auto lon = t.optional_number(r, "lon");
      const auto lat = t.optional_number(r, "lat");
      if (lon && lat) c.coordinates = Coordinates{*lon, *lat};
    }
    clusters.push_back(std::move(c));
  }
  if (clusters.empty()) throw ValidationError(path.string() + ": frame has no clusters");
  return SamplingFrame(std::move(strata), std::move(clusters));
}

void write_frame_csv(const SamplingFrame& frame, const std::filesystem::path& path) {
  csv::Writer w(path, {"cluster_id", "stratum_id", "area_id", "urban", "households", "lon", "lat"});
  for (std::size_t c = 0; c < frame.clusters().size(); ++c) {
    const Cluster& cl = frame.clusters()[c];
    const Stratum& s = frame.strata()[frame.stratum_of(c)];
    w.cell(cl.id).cell(cl.stratum_id).cell(s.area_id).cell(s.urban ? 1 : 0).cell(cl.households);
    if (cl.coordinates) {
      w.cell(cl.coordinates->lon).cell(cl.coordinates->lat);
    } else {
      w.cell(std::string_view{}).cell(std::string_view{});
    }
    w.end_row();
  }
}

SamplingFrame synthesize_frame(const SyntheticFrameSpec& spec) {
  if (spec.areas.empty()) throw ValidationError("synthetic frame needs at least one area");
  if (spec.min_households < 1 || spec.max_households < spec.min_households) {
    throw ValidationError("synthetic frame household range is invalid");
  }
  if (spec.urban_clusters_per_area + spec.rural_clusters_per_area == 0) {
    throw ValidationError("synthetic frame needs clusters in every area");
  }
  const std::size_t cols = std::max<std::size_t>(1, spec.grid_cols);
  Rng rng(spec.seed);
  std::vector<Stratum> strata;
  std::vector<Cluster> clusters;
  std::size_t next = 1;
  for (std::size_t k = 0; k < spec.areas.size(); ++k) {
    const std::string& area = spec.areas[k];
    const double x0 = static_cast<double>(k % cols);
    const double y0 = static_cast<double>(k / cols);
    for (int urban = 1; urban >= 0; --urban) {
      const std::size_t count = urban ? spec.urban_clusters_per_area : spec.rural_clusters_per_area;
      if (count == 0) continue;
      Stratum s{area + (urban ? "_U" : "_R"), area, urban == 1};
      for (std::size_t j = 0; j < count; ++j) {
        char id[24];
        std::snprintf(id, sizeof id, "C%05zu", next++);
        Cluster c{id, s.id, rng.uniform_int(spec.min_households, spec.max_households), std::nullopt};
        c.coordinates = Coordinates{x0 + rng.uniform(), y0 + rng.uniform()};
        clusters.push_back(std::move(c));
      }
      strata.push_back(std::move(s));
    }
  }
  return SamplingFrame(std::move(strata), std::move(clusters));
}

std::size_t FinitePopulation::area_position(const std::string& area_id) const {
  const auto it = std::find(area_ids_.begin(), area_ids_.end(), area_id);
  if (it == area_ids_.end()) throw ValidationError("unknown area '" + area_id + "'");
  return static_cast<std::size_t>(it - area_ids_.begin());
}

void FinitePopulation::recompute_truth() {
  const std::size_t m = area_ids_.size();
  area_sizes_.assign(m, 0);
  area_positives_.assign(m, 0);
  for (std::size_t c = 0; c < outcomes_.size(); ++c) {
    const std::size_t a = frame_to_position_[frame_.area_of_cluster(c)];
    area_sizes_[a] += static_cast<std::int64_t>(outcomes_[c].size());
    for (std::uint8_t y : outcomes_[c]) area_positives_[a] += y;
  }
  truth_.assign(m, 0.0);
  for (std::size_t a = 0; a < m; ++a) {
    truth_[a] = static_cast<double>(area_positives_[a]) / static_cast<double>(area_sizes_[a]);
  }
}

namespace {

std::vector<std::size_t> align_areas(const SamplingFrame& frame, const std::vector<std::string>& order) {
  if (order.size() != frame.areas().size()) {
    throw ValidationError("area list has " + std::to_string(order.size()) + " areas but the frame has " +
                          std::to_string(frame.areas().size()));
  }
  std::vector<std::size_t> map(frame.areas().size());
  for (std::size_t a = 0; a < frame.areas().size(); ++a) {
    const auto it = std::find(order.begin(), order.end(), frame.areas()[a]);
    if (it == order.end()) {
      throw ValidationError("frame area '" + frame.areas()[a] + "' is missing from the adjacency graph");
    }
    map[a] = static_cast<std::size_t>(it - order.begin());
  }
  return map;
}

}  // namespace

FinitePopulation generate_population(const SamplingFrame& frame, const PopulationConfig& config) {
  const SpatialStructure& graph = config.adjacency;
  const std::size_t m = graph.size();
  if (m == 0) throw ValidationError("population config has no adjacency graph");
  if (config.areas != 0 && config.areas != m) {
    throw ValidationError("config.areas = " + std::to_string(config.areas) + " but adjacency has " +
                          std::to_string(m) + " areas");
  }
  if (!(config.spatial_proportion >= 0.0 && config.spatial_proportion <= 1.0)) {
    throw ValidationError("spatial_proportion must lie in [0, 1]");
  }
  if (config.area_effect_sd < 0.0 || config.cluster_effect_sd < 0.0) {
    throw ValidationError("effect standard deviations must be >= 0");
  }
  if (config.persons_per_household < 1) throw ValidationError("persons_per_household must be >= 1");
  const auto k = static_cast<Eigen::Index>(config.covariate_effects.size());
  if (config.area_covariates.size() != 0 &&
      (config.area_covariates.rows() != static_cast<Eigen::Index>(m) || config.area_covariates.cols() != k)) {
    throw ValidationError("area_covariates must be areas x covariate_effects");
  }

  FinitePopulation pop;
  pop.frame_ = frame;
  pop.persons_per_household_ = config.persons_per_household;
  pop.area_ids_ = graph.nodes();
  pop.frame_to_position_ = align_areas(frame, pop.area_ids_);

  Rng rng(config.seed);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(m), k);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < k; ++j) x(i, j) = rng.normal();
  }
  if (config.area_covariates.size() != 0) x = config.area_covariates;
  pop.area_covariates_ = x;

  std::vector<double> iid(m);
  for (double& e : iid) e = rng.normal();
  const Eigen::VectorXd s = sample_scaled_icar(graph, rng);
  pop.area_effects_ = bym2_combine(iid, std::span<const double>(s.data(), m), config.area_effect_sd,
                                   config.spatial_proportion);

  Eigen::VectorXd beta(k);
  for (Eigen::Index j = 0; j < k; ++j) beta(j) = config.covariate_effects[static_cast<std::size_t>(j)];
  const Eigen::VectorXd area_lp = k > 0 ? Eigen::VectorXd(x * beta) : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));

  const std::size_t n_clusters = frame.clusters().size();
  std::vector<double> cluster_eps(n_clusters);
  for (double& e : cluster_eps) e = rng.normal() * config.cluster_effect_sd;

  pop.outcomes_.resize(n_clusters);
  pop.cluster_risk_.resize(n_clusters);
  for (std::size_t c = 0; c < n_clusters; ++c) {
    const auto a = static_cast<Eigen::Index>(pop.frame_to_position_[frame.area_of_cluster(c)]);
    const double eta = config.intercept + area_lp(a) + (frame.cluster_is_urban(c) ? config.urban_log_odds : 0.0) +
                       pop.area_effects_(a) + cluster_eps[c];
    const double p = expit(eta);
    pop.cluster_risk_[c] = p;
    const auto persons = static_cast<std::size_t>(frame.clusters()[c].households * config.persons_per_household);
    auto& y = pop.outcomes_[c];
    y.resize(persons);
    for (auto& v : y) v = rng.uniform() < p ? 1 : 0;
  }
  pop.recompute_truth();
  return pop;
}

double finite_population_mean(const FinitePopulation& population, const std::string& area_id) {
  return population.truth()[population.area_position(area_id)];
}

void write_population_csv(const FinitePopulation& population, const std::filesystem::path& path) {
  csv::Writer w(path, {"cluster_id", "household", "persons", "positives"});
  const int pph = population.persons_per_household();
  const auto& clusters = population.frame().clusters();
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    const auto& y = population.outcomes(c);
    for (std::int64_t h = 0; h < clusters[c].households; ++h) {
      int positives = 0;
      for (int k = 0; k < pph; ++k) positives += y[static_cast<std::size_t>(h * pph + k)];
      w.cell(clusters[c].id).cell(h + 1).cell(pph).cell(positives);
      w.end_row();
    }
  }
}

FinitePopulation read_population_csv(const SamplingFrame& frame, const std::filesystem::path& path,
                                     const std::vector<std::string>& area_order) {
  const csv::Table t = csv::read(path);
  FinitePopulation pop;
  pop.frame_ = frame;
  pop.area_ids_ = area_order.empty() ? frame.areas() : area_order;
  pop.frame_to_position_ = align_areas(frame, pop.area_ids_);
  std::map<std::string, std::size_t> cluster_index;
  for (std::size_t c = 0; c < frame.clusters().size(); ++c) cluster_index.emplace(frame.clusters()[c].id, c);
  pop.outcomes_.assign(frame.clusters().size(), {});
  int pph = -1;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const auto it = cluster_index.find(t.text(r, "cluster_id"));
    if (it == cluster_index.end()) {
      throw ValidationError(path.string() + " line " + std::to_string(t.line_of(r)) + ": unknown cluster '" +
                            t.text(r, "cluster_id") + "'");
    }
    const auto persons = t.integer(r, "persons");
    const auto positives = t.integer(r, "positives");
    if (persons < 1 || positives < 0 || positives > persons) {
      throw ValidationError(path.string() + " line " + std::to_string(t.line_of(r)) +
                            ": need 0 <= positives <= persons and persons >= 1");
    }
    if (pph < 0) pph = static_cast<int>(persons);
    if (persons != pph) {
      throw ValidationError(path.string() + ": persons per household must be constant");
    }
    auto& y = pop.outcomes_[it->second];
    for (std::int64_t k = 0; k < persons; ++k) y.push_back(k < positives ? 1 : 0);
  }
  pop.persons_per_household_ = std::max(pph, 1);
  for (std::size_t c = 0; c < frame.clusters().size(); ++c) {
    const auto expected = static_cast<std::size_t>(frame.clusters()[c].households * pop.persons_per_household_);
    if (pop.outcomes_[c].size() != expected) {
      throw ValidationError(path.string() + ": cluster '" + frame.clusters()[c].id + "' has " +
                            std::to_string(pop.outcomes_[c].size()) + " persons, frame implies " +
                            std::to_string(expected));
    }
  }
  pop.cluster_risk_.assign(frame.clusters().size(), std::numeric_limits<double>::quiet_NaN());
  pop.area_effects_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pop.area_ids_.size()));
  pop.recompute_truth();
  return pop;
}

void write_truth_csv(const FinitePopulation& population, const std::filesystem::path& path) {
  csv::Writer w(path, {"area_id", "N", "positives", "m"});
  for (std::size_t a = 0; a < population.area_ids().size(); ++a) {
    w.cell(population.area_ids()[a])
        .cell(population.area_sizes()[a])
        .cell(population.area_positives()[a])
        .cell(population.truth()[a]);
    w.end_row();
  }
}

}  // namespace sae
