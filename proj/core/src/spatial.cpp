#include "sae/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <queue>
#include <set>
#include <sstream>

#include "sae/error.hpp"

namespace sae {
namespace {

constexpr double kNullTolerance = 1e-9;

std::string describe_components(const std::vector<std::vector<std::size_t>>& comps,
                                const std::vector<std::string>& names) {
  std::ostringstream os;
  for (std::size_t c = 0; c < comps.size(); ++c) {
    os << (c ? "; " : "") << "component " << c + 1 << ": {";
    for (std::size_t k = 0; k < comps[c].size(); ++k) os << (k ? ", " : "") << names[comps[c][k]];
    os << "}";
  }
  return os.str();
}

}  // namespace

std::vector<std::vector<std::size_t>> connected_components(
    const std::vector<std::vector<std::size_t>>& neighbors) {
  const std::size_t n = neighbors.size();
  std::vector<int> label(n, -1);
  std::vector<std::vector<std::size_t>> comps;
  for (std::size_t start = 0; start < n; ++start) {
    if (label[start] >= 0) continue;
    const int id = static_cast<int>(comps.size());
    comps.emplace_back();
    std::queue<std::size_t> queue;
    queue.push(start);
    label[start] = id;
    while (!queue.empty()) {
      const std::size_t v = queue.front();
      queue.pop();
      comps.back().push_back(v);
      for (std::size_t w : neighbors[v]) {
        if (label[w] < 0) {
          label[w] = id;
          queue.push(w);
        }
      }
    }
    std::sort(comps.back().begin(), comps.back().end());
  }
  return comps;
}

IcarScaling scale_icar(const Eigen::MatrixXd& q) {
  const Eigen::Index n = q.rows();
  if (n < 2 || q.cols() != n) throw ValidationError("ICAR structure must be square with >= 2 nodes");
  const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
  if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw ValidationError("ICAR structure is not symmetric");
  }
  if (q.rowwise().sum().cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw ValidationError("ICAR structure rows must sum to zero");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q);
  if (eig.info() != Eigen::Success) throw NumericError("eigendecomposition of ICAR structure failed");
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double lmax = lambda.cwiseAbs().maxCoeff();
  Eigen::MatrixXd ginv = Eigen::MatrixXd::Zero(n, n);
  int nulls = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (lambda(k) < -kNullTolerance * lmax) throw ValidationError("ICAR structure is not positive semidefinite");
    if (lambda(k) <= kNullTolerance * lmax) {
      ++nulls;
      continue;
    }
    const Eigen::VectorXd v = eig.eigenvectors().col(k);
    ginv.noalias() += (v * v.transpose()) / lambda(k);
  }
  if (nulls != 1) {
    throw ValidationError("ICAR structure has " + std::to_string(nulls) +
                          " null directions; the graph must be connected");
  }
  IcarScaling out;
  out.marginal_variances = ginv.diagonal();
  out.scaling_factor = std::exp(out.marginal_variances.array().log().mean());
  out.scaled = out.scaling_factor * q;
  return out;
}

std::size_t SpatialStructure::index_of(const std::string& node) const {
  const auto it = std::find(nodes_.begin(), nodes_.end(), node);
  if (it == nodes_.end()) throw ValidationError("unknown area '" + node + "' in spatial structure");
  return static_cast<std::size_t>(it - nodes_.begin());
}

bool SpatialStructure::contains(const std::string& node) const {
  return std::find(nodes_.begin(), nodes_.end(), node) != nodes_.end();
}

SpatialStructure SpatialStructure::subgraph(const std::vector<std::string>& keep) const {
  std::set<std::string> kept(keep.begin(), keep.end());
  EdgeList edges;
  for (const auto& [a, b] : edges_) {
    if (kept.count(nodes_[a]) && kept.count(nodes_[b])) edges.emplace_back(nodes_[a], nodes_[b]);
  }
  return build_adjacency(edges, keep);
}

SpatialStructure build_adjacency(const EdgeList& edges, const std::vector<std::string>& extra_nodes) {
  SpatialStructure s;
  std::map<std::string, std::size_t> index;
  auto intern = [&](const std::string& name) {
    auto [it, inserted] = index.emplace(name, s.nodes_.size());
    if (inserted) s.nodes_.push_back(name);
    return it->second;
  };
  for (const auto& name : extra_nodes) intern(name);
  std::set<std::pair<std::size_t, std::size_t>> unique;
  for (const auto& [a, b] : edges) {
    if (a == b) throw ValidationError("self-loop on area '" + a + "' in adjacency");
    const std::size_t i = intern(a);
    const std::size_t j = intern(b);
    unique.emplace(std::min(i, j), std::max(i, j));
  }
  const std::size_t n = s.nodes_.size();
  if (n < 2) throw ValidationError("adjacency graph needs at least two areas");
  s.edges_.assign(unique.begin(), unique.end());
  s.neighbors_.assign(n, {});
  s.q_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& [i, j] : s.edges_) {
    s.neighbors_[i].push_back(j);
    s.neighbors_[j].push_back(i);
    const auto ii = static_cast<Eigen::Index>(i);
    const auto jj = static_cast<Eigen::Index>(j);
    s.q_(ii, jj) = -1.0;
    s.q_(jj, ii) = -1.0;
    s.q_(ii, ii) += 1.0;
    s.q_(jj, jj) += 1.0;
  }
  for (auto& nb : s.neighbors_) std::sort(nb.begin(), nb.end());
  const auto comps = connected_components(s.neighbors_);
  if (comps.size() != 1) {
    throw ValidationError("adjacency graph is disconnected (" + std::to_string(comps.size()) +
                          " components): " + describe_components(comps, s.nodes_));
  }
  const IcarScaling scaling = scale_icar(s.q_);
  s.q_scaled_ = scaling.scaled;
  s.scaling_factor_ = scaling.scaling_factor;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.q_scaled_);
  if (eig.info() != Eigen::Success) throw NumericError("eigendecomposition of scaled structure failed");
  // Ascending order: the single null direction comes first.
  const auto m = static_cast<Eigen::Index>(n) - 1;
  s.eigenvalues_ = eig.eigenvalues().tail(m);
  s.eigenvectors_ = eig.eigenvectors().rightCols(m);
  s.log_pdet_ = s.eigenvalues_.array().log().sum();
  return s;
}

EdgeList read_adjacency_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open adjacency file: " + path.string());
  EdgeList edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string a, b, extra;
    if (!(ls >> a)) continue;
    if (!(ls >> b) || (ls >> extra)) {
      throw ValidationError(path.string() + " line " + std::to_string(line_no) +
                            ": expected exactly two area ids");
    }
    edges.emplace_back(a, b);
  }
  return edges;
}

void write_adjacency_file(const SpatialStructure& structure, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write file: " + path.string());
  out << "# area_a area_b\n";
  for (const auto& [i, j] : structure.edges()) {
    out << structure.nodes()[i] << ' ' << structure.nodes()[j] << '\n';
  }
}

Eigen::VectorXd bym2_combine(std::span<const double> iid, std::span<const double> spatial,
                             double sigma_b, double phi) {
  if (iid.size() != spatial.size()) throw ValidationError("bym2_combine: length mismatch");
  if (!(phi >= 0.0 && phi <= 1.0)) throw ValidationError("bym2_combine: phi must lie in [0, 1]");
  if (!(sigma_b >= 0.0)) throw ValidationError("bym2_combine: sigma_b must be >= 0");
  const double a = std::sqrt(1.0 - phi);
  const double b = std::sqrt(phi);
  Eigen::VectorXd out(static_cast<Eigen::Index>(iid.size()));
  for (std::size_t i = 0; i < iid.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = sigma_b * (a * iid[i] + b * spatial[i]);
  }
  return out;
}

double icar_logdensity(std::span<const double> s, const SpatialStructure& structure) {
  if (s.size() != structure.size()) throw ValidationError("icar_logdensity: length mismatch");
  double mean = 0.0;
  for (double v : s) mean += v;
  mean /= static_cast<double>(s.size());
  double quad = 0.0;
  for (const auto& [i, j] : structure.edges()) {
    const double d = (s[i] - mean) - (s[j] - mean);
    quad += d * d;
  }
  quad *= structure.scaling_factor();
  const double rank = static_cast<double>(structure.size() - 1);
  return -0.5 * quad + 0.5 * structure.log_pseudo_determinant() -
         0.5 * rank * std::log(2.0 * std::numbers::pi);
}

Eigen::VectorXd sample_scaled_icar(const SpatialStructure& structure, Rng& rng) {
  const auto& vals = structure.scaled_eigenvalues();
  const auto& vecs = structure.scaled_eigenvectors();
  Eigen::VectorXd s = Eigen::VectorXd::Zero(vecs.rows());
  for (Eigen::Index k = 0; k < vals.size(); ++k) {
    s.noalias() += vecs.col(k) * (rng.normal() / std::sqrt(vals(k)));
  }
  return s;
}

double matern_cov_bessel(double d, const MaternParams& p) {
  const double var = p.sigma * p.sigma;
  if (d <= 0.0) return var;
  const double nu = p.smoothness;
  const double x = std::sqrt(8.0 * nu) * d / p.range;
  if (x > 700.0) return 0.0;
  const double log_c = (1.0 - nu) * std::log(2.0) - std::lgamma(nu) + nu * std::log(x);
  return var * std::exp(log_c) * std::cyl_bessel_k(nu, x);
}

double matern_cov(double d, const MaternParams& p) {
  const double var = p.sigma * p.sigma;
  if (d <= 0.0) return var;
  const double nu = p.smoothness;
  // Half-integer orders have elementary closed forms.
  if (nu == 0.5 || nu == 1.5 || nu == 2.5) {
    const double x = std::sqrt(8.0 * nu) * d / p.range;
    const double e = std::exp(-x);
    if (nu == 0.5) return var * e;
    if (nu == 1.5) return var * (1.0 + x) * e;
    return var * (1.0 + x + x * x / 3.0) * e;
  }
  return matern_cov_bessel(d, p);
}

double distance(const Point2& a, const Point2& b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

Eigen::MatrixXd matern_matrix(std::span<const Point2> points, const MaternParams& params) {
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = params.sigma * params.sigma;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double c = matern_cov(distance(points[i], points[j]), params);
      k(i, j) = c;
      k(j, i) = c;
    }
  }
  return k;
}

Eigen::MatrixXd matern_cross(std::span<const Point2> rows, std::span<const Point2> cols,
                             const MaternParams& params) {
  Eigen::MatrixXd k(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          matern_cov(distance(rows[i], cols[j]), params);
    }
  }
  return k;
}

SpatialStructure random_planar_graph(std::size_t rows, std::size_t cols, std::uint64_t seed,
                                     double removal_probability) {
  if (rows * cols < 2) throw ValidationError("random_planar_graph needs at least two nodes");
  Rng rng(seed);
  auto id = [&](std::size_t r, std::size_t c) { return r * cols + c; };
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c + 1 < cols) edges.emplace_back(id(r, c), id(r, c + 1));
      if (r + 1 < rows) edges.emplace_back(id(r, c), id(r + 1, c));
      if (r + 1 < rows && c + 1 < cols) {
        if (rng.bernoulli(0.5)) {
          edges.emplace_back(id(r, c), id(r + 1, c + 1));
        } else {
          edges.emplace_back(id(r, c + 1), id(r + 1, c));
        }
      }
    }
  }
  const std::size_t n = rows * cols;
  std::vector<bool> alive(edges.size(), true);
  auto neighbours = [&]() {
    std::vector<std::vector<std::size_t>> nb(n);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (!alive[e]) continue;
      nb[edges[e].first].push_back(edges[e].second);
      nb[edges[e].second].push_back(edges[e].first);
    }
    return nb;
  };
  std::vector<std::size_t> order(edges.size());
  for (std::size_t e = 0; e < order.size(); ++e) order[e] = e;
  std::shuffle(order.begin(), order.end(), rng.engine());
  for (std::size_t e : order) {
    if (!rng.bernoulli(removal_probability)) continue;
    alive[e] = false;
    if (connected_components(neighbours()).size() != 1) alive[e] = true;
  }
  std::vector<std::string> names(n);
  for (std::size_t k = 0; k < n; ++k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "A%02zu", k + 1);
    names[k] = buf;
  }
  EdgeList list;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (alive[e]) list.emplace_back(names[edges[e].first], names[edges[e].second]);
  }
  return build_adjacency(list, names);
}

}  // namespace sae
