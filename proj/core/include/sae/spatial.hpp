#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sae/rng.hpp"

namespace sae {

using EdgeList = std::vector<std::pair<std::string, std::string>>;

// Constrained (sum-to-zero) marginal variances of an ICAR structure and the
// factor that rescales it to unit geometric-mean marginal variance.
struct IcarScaling {
  Eigen::MatrixXd scaled;              // scaling_factor * Q
  double scaling_factor = 1.0;
  Eigen::VectorXd marginal_variances;  // diag of the generalized inverse of Q
};

// Rescales an ICAR structure matrix Q so that the geometric mean of the
// diagonal of its generalized inverse (restricted to the sum-to-zero
// subspace) equals one. Q must be symmetric with zero row sums and exactly
// one null direction (connected graph).
IcarScaling scale_icar(const Eigen::MatrixXd& structure);

// Area adjacency graph with its ICAR structure matrix (degree on the diagonal,
// -1 for neighbours) and the scaled variant used by BYM2. Immutable once
// built; safe to share across threads.
class SpatialStructure {
 public:
  const std::vector<std::string>& nodes() const noexcept { return nodes_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t index_of(const std::string& node) const;
  bool contains(const std::string& node) const;

  const std::vector<std::pair<std::size_t, std::size_t>>& edges() const noexcept { return edges_; }
  const std::vector<std::vector<std::size_t>>& neighbors() const noexcept { return neighbors_; }

  const Eigen::MatrixXd& structure() const noexcept { return q_; }
  const Eigen::MatrixXd& scaled_structure() const noexcept { return q_scaled_; }
  double scaling_factor() const noexcept { return scaling_factor_; }

  // Non-null eigenpairs of the scaled structure (size - 1 of them).
  const Eigen::VectorXd& scaled_eigenvalues() const noexcept { return eigenvalues_; }
  const Eigen::MatrixXd& scaled_eigenvectors() const noexcept { return eigenvectors_; }
  // Sum of log non-null eigenvalues of the scaled structure.
  double log_pseudo_determinant() const noexcept { return log_pdet_; }

  // Sub-graph induced by `keep`, in the given order. Must stay connected.
  SpatialStructure subgraph(const std::vector<std::string>& keep) const;

 private:
  friend SpatialStructure build_adjacency(const EdgeList&, const std::vector<std::string>&);

  std::vector<std::string> nodes_;
  std::vector<std::pair<std::size_t, std::size_t>> edges_;
  std::vector<std::vector<std::size_t>> neighbors_;
  Eigen::MatrixXd q_;
  Eigen::MatrixXd q_scaled_;
  double scaling_factor_ = 1.0;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
  double log_pdet_ = 0.0;
};

// Builds the structure from an undirected edge list. Duplicate edges (in
// either orientation) are merged. `extra_nodes` fixes node order: listed nodes
// come first, in that order, followed by any others in first-seen order.
// Throws ValidationError on self-loops, fewer than two nodes, or a
// disconnected graph (the message names the components).
SpatialStructure build_adjacency(const EdgeList& edges,
                                 const std::vector<std::string>& extra_nodes = {});

// Adjacency file: one "area_a area_b" pair per line, whitespace separated,
// '#' starts a comment.
EdgeList read_adjacency_file(const std::filesystem::path& path);
void write_adjacency_file(const SpatialStructure& structure, const std::filesystem::path& path);

// Connected components as lists of node indices, given adjacency lists.
std::vector<std::vector<std::size_t>> connected_components(
    const std::vector<std::vector<std::size_t>>& neighbors);

// b = sigma_b * (sqrt(1 - phi) * e + sqrt(phi) * s)
Eigen::VectorXd bym2_combine(std::span<const double> iid, std::span<const double> spatial,
                             double sigma_b, double phi);

// Log density of the scaled ICAR prior: -0.5 * s' Q_scaled s on the
// sum-to-zero subspace (s is centred first) plus the constant
// 0.5 * log pdet(Q_scaled) - 0.5 * (n - 1) * log(2 pi).
double icar_logdensity(std::span<const double> s, const SpatialStructure& structure);

// Draws s ~ N(0, Q_scaled^-) with sum(s) = 0.
Eigen::VectorXd sample_scaled_icar(const SpatialStructure& structure, Rng& rng);

// Matern covariance with range parameterized so the correlation at distance
// `range` is roughly 0.1:
//   sigma^2 * 2^(1-nu) / Gamma(nu) * x^nu * K_nu(x),   x = sqrt(8 nu) d / range
struct MaternParams {
  double sigma = 1.0;
  double range = 1.0;
  double smoothness = 1.5;
};

double matern_cov(double distance, const MaternParams& params);
// Always evaluates the Bessel form (matern_cov short-cuts half-integer orders).
double matern_cov_bessel(double distance, const MaternParams& params);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

double distance(const Point2& a, const Point2& b) noexcept;
Eigen::MatrixXd matern_matrix(std::span<const Point2> points, const MaternParams& params);
Eigen::MatrixXd matern_cross(std::span<const Point2> rows, std::span<const Point2> cols,
                             const MaternParams& params);

// Random connected planar graph on a rows x cols lattice: grid edges plus one
// random diagonal per cell, then random edge deletions that keep the graph
// connected. Node ids are "A01", "A02", ... in row-major order.
SpatialStructure random_planar_graph(std::size_t rows, std::size_t cols, std::uint64_t seed,
                                     double removal_probability = 0.2);

}  // namespace sae
