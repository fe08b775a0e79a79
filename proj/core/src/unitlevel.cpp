#include "sae/unitlevel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

#include "sae/csv.hpp"
#include "sae/error.hpp"
#include "sae/priors.hpp"

namespace sae {

namespace {

double log_choose(std::int64_t n, std::int64_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log(1 - p) and log(p) without cancellation from the logit.
double log_sigmoid(double x) { return -(std::log1p(std::exp(-std::abs(x))) + std::max(-x, 0.0)); }

// log prod_{k=1}^{m-1} (1 + k/a). Short products and very large a (where the
// log-gamma difference cancels badly) use the direct sum.
double log_rising(std::int64_t m, double a) {
  if (m <= 16 || a > 1e4) {
    double s = 0.0;
    for (std::int64_t k = 1; k < m; ++k) s += std::log1p(static_cast<double>(k) / a);
    return s;
  }
  const auto md = static_cast<double>(m);
  return std::lgamma(a + md) - std::lgamma(a + 1.0) - (md - 1.0) * std::log(a);
}

}  // namespace

double betabinomial_logpmf(std::int64_t y, std::int64_t n, double p, double lambda) {
  if (n < 0 || y < 0 || y > n) throw ValidationError("beta-binomial needs 0 <= y <= n");
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("beta-binomial needs 0 < p < 1");
  if (!(lambda >= 0.0 && lambda < 1.0)) throw ValidationError("beta-binomial needs 0 <= lambda < 1");
  double lp = log_choose(n, y) + static_cast<double>(y) * std::log(p) + static_cast<double>(n - y) * std::log1p(-p);
  if (lambda == 0.0) return lp;
  const double c = (1.0 - lambda) / lambda;  // a + b
  const double a = p * c;
  const double b = (1.0 - p) * c;
  return lp + log_rising(y, a) + log_rising(n - y, b) - log_rising(n, c);
}

std::int64_t betabinomial_draw(std::int64_t n, double p, double lambda, Rng& rng) {
  if (lambda == 0.0) return rng.binomial(n, p);
  const double c = (1.0 - lambda) / lambda;
  return rng.binomial(n, rng.beta(p * c, (1.0 - p) * c));
}

ClusterData cluster_data_from_sample(const SurveySample& sample) {
  ClusterData out;
  for (const auto& r : sample.rows) {
    out.push_back({r.cluster_id, r.area_id, r.urban, r.n_tested, r.y_positive, r.coordinates});
  }
  return out;
}

std::map<std::string, double> read_urban_fractions(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  std::map<std::string, double> out;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const double q = t.number(r, "q");
    if (!(q >= 0.0 && q <= 1.0)) {
      throw ValidationError(path.string() + " line " + std::to_string(t.line_of(r)) + ": q must lie in [0, 1]");
    }
    out[t.text(r, "area_id")] = q;
  }
  return out;
}

std::vector<double> urban_fractions_for(const SpatialStructure& structure, const std::map<std::string, double>& q) {
  std::vector<double> out;
  std::string missing;
  for (const auto& a : structure.nodes()) {
    const auto it = q.find(a);
    if (it == q.end()) {
      missing += (missing.empty() ? "" : ", ") + a;
      out.push_back(0.0);
    } else {
      out.push_back(it->second);
    }
  }
  if (!missing.empty()) throw ValidationError("no urban fraction for area(s): " + missing);
  return out;
}

std::map<std::string, double> frame_urban_fractions(const SamplingFrame& frame) {
  const auto q = frame.urban_fractions();
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < frame.areas().size(); ++i) out[frame.areas()[i]] = q[i];
  return out;
}

Eigen::MatrixXd aggregate_strata(const Eigen::MatrixXd& rural_eta, const Eigen::VectorXd& gamma,
                                 std::span<const double> q) {
  if (static_cast<std::size_t>(rural_eta.cols()) != q.size()) throw ValidationError("missing urban fraction for an area");
  if (gamma.size() != rural_eta.rows()) throw ValidationError("aggregate_strata: one gamma per draw required");
  Eigen::MatrixXd out(rural_eta.rows(), rural_eta.cols());
  for (Eigen::Index a = 0; a < rural_eta.cols(); ++a) {
    const double qa = q[static_cast<std::size_t>(a)];
    if (!(qa >= 0.0 && qa <= 1.0)) throw ValidationError("urban fractions must lie in [0, 1]");
    for (Eigen::Index r = 0; r < rural_eta.rows(); ++r) {
      const double eta = rural_eta(r, a);
      out(r, a) = (1.0 - qa) * sigmoid(eta) + qa * sigmoid(eta + gamma(r));
    }
  }
  return out;
}

namespace {

// Clusters sharing an area and stratum share a success probability, so the
// log-likelihood of a cell needs only its distinct (n, y) pairs.
struct Cell {
  std::size_t area = 0;
  bool urban = false;
  std::vector<std::int64_t> n;
  std::vector<std::int64_t> y;
  std::vector<double> count;
  double log_choose_sum = 0.0;
  std::int64_t max_n = 0;
  std::int64_t max_y = 0;
  std::int64_t max_f = 0;  // failures
};

class CellLikelihood {
 public:
  explicit CellLikelihood(std::vector<Cell> cells) : cells_(std::move(cells)), id_(next_id_++) {}

  const std::vector<Cell>& cells() const { return cells_; }

  // Memoised on the exact (eta, lambda) pair; two slots per cell cover the
  // current and the proposed state of a Metropolis step.
  double operator()(std::size_t c, double eta, double lambda) const {
    Memo& memo = memo_for(c);
    for (int k = 0; k < 2; ++k) {
      if (memo.eta[k] == eta && memo.lambda[k] == lambda) return memo.value[k];
    }
    const double v = evaluate(cells_[c], eta, lambda);
    memo.eta[memo.next] = eta;
    memo.lambda[memo.next] = lambda;
    memo.value[memo.next] = v;
    memo.next ^= 1;
    return v;
  }

 private:
  struct Memo {
    double eta[2] = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    double lambda[2] = {0.0, 0.0};
    double value[2] = {0.0, 0.0};
    int next = 0;
  };

  Memo& memo_for(std::size_t c) const {
    thread_local std::uint64_t owner = 0;
    thread_local std::vector<Memo> memos;
    if (owner != id_) {
      owner = id_;
      memos.assign(cells_.size(), Memo{});
    }
    return memos[c];
  }

  static double evaluate(const Cell& cell, double eta, double lambda) {
    const double log_p = log_sigmoid(eta);
    const double log_q = log_sigmoid(-eta);
    double ll = cell.log_choose_sum;
    for (std::size_t k = 0; k < cell.n.size(); ++k) {
      ll += cell.count[k] * (static_cast<double>(cell.y[k]) * log_p + static_cast<double>(cell.n[k] - cell.y[k]) * log_q);
    }
    if (lambda == 0.0) return ll;
    const double c = (1.0 - lambda) / lambda;
    const double a = sigmoid(eta) * c;
    const double b = sigmoid(-eta) * c;
    // p numerically 0 or 1: the split terms would overflow, and no data with
    // both outcomes supports it.
    if (!(a > 0.0) || !(b > 0.0)) return -std::numeric_limits<double>::infinity();
    if (cell.max_n > 16 && c <= 1e4) {
      for (std::size_t k = 0; k < cell.n.size(); ++k) {
        ll += cell.count[k] *
              (log_rising(cell.y[k], a) + log_rising(cell.n[k] - cell.y[k], b) - log_rising(cell.n[k], c));
      }
      return ll;
    }
    // Prefix sums of log1p(k / shape) for k = 0..max.
    thread_local std::vector<double> pa, pb, pc;
    auto prefix = [](std::vector<double>& out, std::int64_t len, double shape) {
      out.resize(static_cast<std::size_t>(len) + 1);
      out[0] = 0.0;
      for (std::int64_t k = 0; k < len; ++k) out[static_cast<std::size_t>(k) + 1] = out[static_cast<std::size_t>(k)] + std::log1p(static_cast<double>(k) / shape);
    };
    prefix(pa, cell.max_y, a);
    prefix(pb, cell.max_f, b);
    prefix(pc, cell.max_n, c);
    for (std::size_t k = 0; k < cell.n.size(); ++k) {
      const auto yy = static_cast<std::size_t>(cell.y[k]);
      const auto ff = static_cast<std::size_t>(cell.n[k] - cell.y[k]);
      const auto nn = static_cast<std::size_t>(cell.n[k]);
      ll += cell.count[k] * (pa[yy] + pb[ff] - pc[nn]);
    }
    return ll;
  }

  std::vector<Cell> cells_;
  std::uint64_t id_;
  static inline std::atomic<std::uint64_t> next_id_{1};
};

std::vector<Cell> build_cells(const BetaBinomialSpec& spec, std::vector<std::string>& used, std::vector<std::string>& dropped) {
  const SpatialStructure& g = spec.structure;
  std::map<std::pair<std::size_t, bool>, Cell> cells;
  std::vector<std::string> problems;
  std::vector<bool> has_data(g.size(), false);
  for (std::size_t r = 0; r < spec.data.size(); ++r) {
    const auto& c = spec.data[r];
    if (!g.contains(c.area_id)) {
      problems.push_back("cluster '" + c.cluster_id + "': area '" + c.area_id + "' not in the adjacency graph");
      continue;
    }
    if (c.n < 0 || c.y < 0 || c.y > c.n) {
      problems.push_back("cluster '" + c.cluster_id + "': need 0 <= y <= n");
      continue;
    }
    if (std::find(spec.held_out.begin(), spec.held_out.end(), c.area_id) != spec.held_out.end()) continue;
    if (c.n == 0) continue;
    const std::size_t area = g.index_of(c.area_id);
    has_data[area] = true;
    Cell& cell = cells[{area, c.urban}];
    cell.area = area;
    cell.urban = c.urban;
    std::size_t k = 0;
    while (k < cell.n.size() && !(cell.n[k] == c.n && cell.y[k] == c.y)) ++k;
    if (k == cell.n.size()) {
      cell.n.push_back(c.n);
      cell.y.push_back(c.y);
      cell.count.push_back(0.0);
    }
    cell.count[k] += 1.0;
    cell.log_choose_sum += log_choose(c.n, c.y);
    cell.max_n = std::max(cell.max_n, c.n);
    cell.max_y = std::max(cell.max_y, c.y);
    cell.max_f = std::max(cell.max_f, c.n - c.y);
  }
  if (!problems.empty()) {
    std::string msg = "invalid cluster data:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ValidationError(msg);
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto& id = g.nodes()[i];
    if (has_data[i]) {
      used.push_back(id);
    } else if (std::find(spec.held_out.begin(), spec.held_out.end(), id) != spec.held_out.end()) {
      dropped.push_back(id + ": held out");
    } else {
      dropped.push_back(id + ": no sample");
    }
  }
  std::vector<Cell> out;
  for (auto& [key, cell] : cells) out.push_back(std::move(cell));
  return out;
}

}  // namespace

AreaModelFit fit_betabinomial(const BetaBinomialSpec& spec) {
  const SpatialStructure& g = spec.structure;
  const std::size_t m = g.size();
  const Eigen::MatrixXd X = design_with_intercept(spec.covariates, m);
  const auto p = static_cast<std::size_t>(X.cols());
  if (spec.urban_fractions.size() != m) throw ValidationError("one urban fraction per area required");
  if (spec.overdispersion && spec.lambda_prior == LambdaPrior::pc_sqrt) pc_sd_rate(spec.lambda_U, spec.lambda_alpha);

  AreaModelFit out;
  out.area_ids = g.nodes();
  const CellLikelihood cells(build_cells(spec, out.used_areas, out.dropped_areas));
  if (cells.cells().empty()) throw ValidationError("no cluster data to fit");

  // Parameter layout: beta (p), [gamma], [logit lambda], BYM2.
  std::size_t k = p;
  const std::size_t gamma_ix = spec.urban_effect ? k++ : Bym2Component::npos;
  const std::size_t lambda_ix = spec.overdispersion ? k++ : Bym2Component::npos;
  Bym2Component bym2(g, spec.priors, k);

  Problem prob;
  for (std::size_t j = 0; j < p; ++j) {
    prob.names.push_back(j == 0 ? "beta[intercept]" : "beta[" + spec.covariate_names.at(j - 1) + "]");
  }
  if (gamma_ix != Bym2Component::npos) prob.names.push_back("gamma[urban]");
  if (lambda_ix != Bym2Component::npos) prob.names.push_back("logit_lambda");
  bym2.append_names(prob.names);
  prob.init = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k + bym2.size()));
  bym2.initialize(prob.init);
  {
    double yy = 0.0;
    double nn = 0.0;
    for (const auto& c : spec.data) {
      yy += static_cast<double>(c.y);
      nn += static_cast<double>(c.n);
    }
    const double pooled = std::clamp((yy + 0.5) / (nn + 1.0), 1e-4, 1.0 - 1e-4);
    prob.init(0) = std::log(pooled / (1.0 - pooled));
  }
  if (lambda_ix != Bym2Component::npos) prob.init(static_cast<Eigen::Index>(lambda_ix)) = std::log(0.02 / 0.98);
  prob.init_jitter = 0.1;

  const double fixed_gamma = spec.urban_effect ? 0.0 : spec.fixed_urban_log_odds;
  auto gamma_of = [gamma_ix, fixed_gamma](const Eigen::VectorXd& x) {
    return gamma_ix == Bym2Component::npos ? fixed_gamma : x(static_cast<Eigen::Index>(gamma_ix));
  };
  auto lambda_of = [lambda_ix](const Eigen::VectorXd& x) {
    return lambda_ix == Bym2Component::npos ? 0.0 : sigmoid(x(static_cast<Eigen::Index>(lambda_ix)));
  };
  std::vector<std::vector<std::size_t>> cells_of_area(m);
  for (std::size_t c = 0; c < cells.cells().size(); ++c) cells_of_area[cells.cells()[c].area].push_back(c);

  auto cell_ll = [&](const Eigen::VectorXd& x, std::size_t c, double gamma, double lambda) {
    const Cell& cell = cells.cells()[c];
    const auto i = static_cast<Eigen::Index>(cell.area);
    double eta = X.row(i).dot(x.head(static_cast<Eigen::Index>(p))) + bym2.effect(x, cell.area);
    if (cell.urban) eta += gamma;
    return cells(c, eta, lambda);
  };
  auto area_lik = [&](const Eigen::VectorXd& x, std::size_t i) {
    const double gamma = gamma_of(x);
    const double lambda = lambda_of(x);
    double s = 0.0;
    for (std::size_t c : cells_of_area[i]) s += cell_ll(x, c, gamma, lambda);
    return s;
  };
  LogDensity lik = [&](const Eigen::VectorXd& x) {
    const double gamma = gamma_of(x);
    const double lambda = lambda_of(x);
    double s = 0.0;
    for (std::size_t c = 0; c < cells.cells().size(); ++c) s += cell_ll(x, c, gamma, lambda);
    return s;
  };
  const double fe_sd = spec.priors.fixed_effect_sd;
  auto fixed_prior = [&](const Eigen::VectorXd& x) {
    double s = 0.0;
    for (std::size_t j = 0; j < p; ++j) s += normal_logdensity(x(static_cast<Eigen::Index>(j)), 0.0, fe_sd);
    if (gamma_ix != Bym2Component::npos) s += normal_logdensity(x(static_cast<Eigen::Index>(gamma_ix)), 0.0, fe_sd);
    return s;
  };
  auto lambda_prior = [&](const Eigen::VectorXd& x) {
    if (lambda_ix == Bym2Component::npos) return 0.0;
    const double eta = x(static_cast<Eigen::Index>(lambda_ix));
    const double lam = sigmoid(eta);
    if (!(lam > 0.0 && lam < 1.0)) return -std::numeric_limits<double>::infinity();
    const double jac = log_sigmoid(eta) + log_sigmoid(-eta);
    if (spec.lambda_prior == LambdaPrior::uniform) return jac;
    return sqrt_exponential_logdensity(lam, spec.lambda_U, spec.lambda_alpha) + jac;
  };
  prob.log_posterior = [&](const Eigen::VectorXd& x) {
    return lik(x) + fixed_prior(x) + lambda_prior(x) + bym2.hyper_logprior(x) + bym2.latent_logprior(x);
  };

  Block beta;
  beta.name = "beta";
  for (std::size_t j = 0; j < p; ++j) beta.indices.push_back(j);
  beta.conditional = [&](const Eigen::VectorXd& x) { return lik(x) + fixed_prior(x); };
  beta.initial_scale = 0.05;
  prob.blocks.push_back(beta);
  if (gamma_ix != Bym2Component::npos) {
    Block gb;
    gb.name = "gamma[urban]";
    gb.indices = {gamma_ix};
    gb.conditional = [&](const Eigen::VectorXd& x) {
      // Only urban cells depend on gamma.
      const double gamma = gamma_of(x);
      const double lambda = lambda_of(x);
      double s = fixed_prior(x);
      for (std::size_t c = 0; c < cells.cells().size(); ++c) {
        if (cells.cells()[c].urban) s += cell_ll(x, c, gamma, lambda);
      }
      return s;
    };
    gb.initial_scale = 0.1;
    prob.blocks.push_back(gb);
  }
  if (lambda_ix != Bym2Component::npos) {
    Block lb;
    lb.name = "logit_lambda";
    lb.indices = {lambda_ix};
    lb.conditional = [&](const Eigen::VectorXd& x) { return lik(x) + lambda_prior(x); };
    lb.initial_scale = 0.5;
    prob.blocks.push_back(lb);
  }
  bym2.add_blocks(prob.blocks, lik, area_lik);
  prob.blocks.push_back(bym2.shift_block(0, fe_sd));

  out.posterior = run_chains(prob, spec.mcmc);
  const Eigen::MatrixXd draws = out.posterior.pooled();
  out.theta.resize(draws.rows(), static_cast<Eigen::Index>(m));
  Eigen::VectorXd gamma(draws.rows());
  for (Eigen::Index r = 0; r < draws.rows(); ++r) {
    const Eigen::VectorXd x = draws.row(r).transpose();
    out.theta.row(r) = (X * x.head(static_cast<Eigen::Index>(p)) + bym2.effects(x)).transpose();
    gamma(r) = gamma_of(x);
  }
  out.prevalence = aggregate_strata(out.theta, gamma, spec.urban_fractions);
  return out;
}

}  // namespace sae
