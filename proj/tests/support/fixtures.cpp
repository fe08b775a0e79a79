#include "fixtures.hpp"

namespace fixture {

World make_world(std::uint64_t seed, std::size_t urban_clusters, std::size_t rural_clusters) {
  World w{sae::random_planar_graph(3, 9, seed), {}};
  sae::SyntheticFrameSpec spec;
  spec.areas = w.graph.nodes();
  spec.urban_clusters_per_area = urban_clusters;
  spec.rural_clusters_per_area = rural_clusters;
  spec.seed = seed + 1;
  w.frame = sae::synthesize_frame(spec);
  return w;
}

sae::PopulationConfig population_config(const World& world, std::uint64_t seed) {
  sae::PopulationConfig c;
  c.areas = world.graph.size();
  c.adjacency = world.graph;
  c.intercept = sae::logit(0.06);
  c.urban_log_odds = 0.0;
  c.area_effect_sd = 0.4;
  c.spatial_proportion = 0.6;
  c.cluster_effect_sd = 0.2;
  c.seed = seed;
  return c;
}

sae::TwoStageDesign design(const World& world, std::int64_t urban_clusters, std::int64_t rural_clusters,
                           std::int64_t households, std::uint64_t seed) {
  sae::TwoStageDesign d;
  for (const auto& s : world.frame.strata()) d.clusters_per_stratum[s.id] = s.urban ? urban_clusters : rural_clusters;
  d.households_per_cluster = households;
  d.seed = seed;
  return d;
}

sae::AreaDirectEstimates direct_in_graph_order(const World& world, const sae::SurveySample& sample) {
  return sae::direct_by_area(sample, world.graph.nodes());
}

std::vector<double> column(const Eigen::MatrixXd& m, Eigen::Index c) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) out[static_cast<std::size_t>(r)] = m(r, c);
  return out;
}

}  // namespace fixture
