#pragma once

// Synthetic worlds shared by unit and acceptance tests.

#include <cstdint>
#include <string>
#include <vector>

#include "sae/direct.hpp"
#include "sae/population.hpp"
#include "sae/sampling.hpp"
#include "sae/spatial.hpp"

namespace fixture {

// 27 areas on a 3 x 9 random planar graph with an urban and a rural stratum each.
struct World {
  sae::SpatialStructure graph;
  sae::SamplingFrame frame;
};

World make_world(std::uint64_t seed, std::size_t urban_clusters = 4, std::size_t rural_clusters = 13);

// Prevalence around 6%, BYM2 area effects, modest cluster noise.
sae::PopulationConfig population_config(const World& world, std::uint64_t seed);

// Same take in every stratum of a given type.
sae::TwoStageDesign design(const World& world, std::int64_t urban_clusters, std::int64_t rural_clusters,
                           std::int64_t households, std::uint64_t seed);

// Direct estimates in graph order.
sae::AreaDirectEstimates direct_in_graph_order(const World& world, const sae::SurveySample& sample);

std::vector<double> column(const Eigen::MatrixXd& m, Eigen::Index c);

}  // namespace fixture
