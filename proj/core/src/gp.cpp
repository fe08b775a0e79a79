#include "sae/gp.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>

#include "sae/csv.hpp"
#include "sae/error.hpp"
#include "sae/priors.hpp"

namespace sae {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double log_sigmoid(double x) { return -(std::log1p(std::exp(-std::abs(x))) + std::max(-x, 0.0)); }

Eigen::MatrixXd correlation_chol(const std::vector<Point2>& sites, double range, double smoothness, double jitter) {
  Eigen::MatrixXd R = matern_matrix(sites, {1.0, range, smoothness});
  R.diagonal().array() += jitter;
  Eigen::LLT<Eigen::MatrixXd> llt(R);
  if (llt.info() != Eigen::Success) {
    throw NumericError("Cholesky of the Matern correlation failed (range " + csv::format(range) +
                       "); increase the jitter or use a nugget floor");
  }
  return llt.matrixL();
}

// Two-slot per-thread cache of correlation Cholesky factors keyed by range.
class CholCache {
 public:
  CholCache(const std::vector<Point2>& sites, double smoothness, double jitter)
      : sites_(sites), smoothness_(smoothness), jitter_(jitter), id_(next_id_++) {}

  const Eigen::MatrixXd& get(double range) const {
    thread_local std::uint64_t owner = 0;
    thread_local Slot slots[2];
    thread_local int next = 0;
    if (owner != id_) {
      owner = id_;
      slots[0] = Slot{};
      slots[1] = Slot{};
      next = 0;
    }
    for (auto& s : slots) {
      if (s.range == range) return s.chol;
    }
    Slot& s = slots[next];
    next ^= 1;
    s.range = std::numeric_limits<double>::quiet_NaN();
    s.chol = correlation_chol(sites_, range, smoothness_, jitter_);
    s.range = range;
    return s.chol;
  }

 private:
  struct Slot {
    double range = std::numeric_limits<double>::quiet_NaN();
    Eigen::MatrixXd chol;
  };
  const std::vector<Point2>& sites_;
  double smoothness_;
  double jitter_;
  std::uint64_t id_;
  static inline std::atomic<std::uint64_t> next_id_{1};
};

}  // namespace

GpFit fit_gp_unit(const GpUnitSpec& spec) {
  const auto n = spec.data.size();
  if (n < 2) throw ValidationError("GP model needs at least two clusters");
  if (n > 2000) throw ValidationError("GP model uses dense Cholesky; more than 2000 clusters is not supported");
  if (!(spec.jitter > 0.0)) throw ValidationError("GP jitter must be positive");
  GpFit fit;
  fit.smoothness = spec.priors.smoothness;
  fit.jitter = spec.jitter;
  std::vector<double> yv;
  std::vector<double> nv;
  std::vector<bool> urban;
  for (const auto& c : spec.data) {
    if (!c.coordinates) throw ValidationError("cluster '" + c.cluster_id + "' has no coordinates");
    if (c.n < 0 || c.y < 0 || c.y > c.n) throw ValidationError("cluster '" + c.cluster_id + "': need 0 <= y <= n");
    fit.sites.push_back({c.coordinates->lon, c.coordinates->lat});
    fit.cluster_ids.push_back(c.cluster_id);
    yv.push_back(static_cast<double>(c.y));
    nv.push_back(static_cast<double>(c.n));
    urban.push_back(c.urban);
  }
  double max_d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double d = distance(fit.sites[i], fit.sites[j]);
      if (d == 0.0) {
        throw ValidationError("clusters '" + fit.cluster_ids[i] + "' and '" + fit.cluster_ids[j] + "' share coordinates");
      }
      max_d = std::max(max_d, d);
    }
  }
  const GpPriors& pr = spec.priors;
  const double rho0 = pr.range_rho0 > 0.0 ? pr.range_rho0 : 0.1 * max_d;
  pc_sd_rate(pr.sigma_U, pr.sigma_alpha);
  if (!(pr.smoothness > 0.0)) throw ValidationError("Matern smoothness must be positive");
  if (pr.fixed_range && !(*pr.fixed_range > 0.0)) throw ValidationError("fixed range must be positive");
  if (pr.fixed_nugget && !(*pr.fixed_nugget >= 0.0)) throw ValidationError("fixed nugget must be >= 0");
  const bool nugget_free = !pr.fixed_nugget.has_value();
  const bool has_nugget = nugget_free || *pr.fixed_nugget > 0.0;

  // Layout: beta0, [gamma], [logit lambda], log sigma, [log range], [log nugget], zS (n), [zE (n)].
  const auto npos = std::numeric_limits<std::size_t>::max();
  std::size_t k = 1;
  const std::size_t gamma_ix = spec.urban_effect ? k++ : npos;
  const std::size_t lambda_ix = spec.overdispersion ? k++ : npos;
  const std::size_t sigma_ix = k++;
  const std::size_t range_ix = pr.fixed_range ? npos : k++;
  const std::size_t nugget_ix = nugget_free ? k++ : npos;
  const std::size_t zs0 = k;
  k += n;
  const std::size_t ze0 = has_nugget ? k : npos;
  if (has_nugget) k += n;

  Problem prob;
  prob.names.push_back("beta[intercept]");
  if (gamma_ix != npos) prob.names.push_back("gamma[urban]");
  if (lambda_ix != npos) prob.names.push_back("logit_lambda");
  prob.names.push_back("log_sigma_S");
  if (range_ix != npos) prob.names.push_back("log_range");
  if (nugget_ix != npos) prob.names.push_back("log_sigma_eps");
  for (const auto& id : fit.cluster_ids) prob.names.push_back("zS[" + id + "]");
  if (has_nugget) {
    for (const auto& id : fit.cluster_ids) prob.names.push_back("zE[" + id + "]");
  }
  prob.init = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
  {
    double ys = 0.0;
    double ns = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      ys += yv[i];
      ns += nv[i];
    }
    const double pooled = std::clamp((ys + 0.5) / (ns + 1.0), 1e-4, 1.0 - 1e-4);
    prob.init(0) = std::log(pooled / (1.0 - pooled));
  }
  prob.init(static_cast<Eigen::Index>(sigma_ix)) = std::log(0.5);
  if (range_ix != npos) prob.init(static_cast<Eigen::Index>(range_ix)) = std::log(std::max(2.0 * rho0, 1e-6));
  if (nugget_ix != npos) prob.init(static_cast<Eigen::Index>(nugget_ix)) = std::log(0.2);
  if (lambda_ix != npos) prob.init(static_cast<Eigen::Index>(lambda_ix)) = std::log(0.02 / 0.98);
  prob.init_jitter = 0.05;

  const CholCache cache(fit.sites, pr.smoothness, spec.jitter);
  const auto ni = static_cast<Eigen::Index>(n);
  auto range_of = [&](const Eigen::VectorXd& x) {
    return range_ix == npos ? *pr.fixed_range : std::exp(x(static_cast<Eigen::Index>(range_ix)));
  };
  auto nugget_of = [&](const Eigen::VectorXd& x) {
    if (nugget_ix != npos) return std::exp(x(static_cast<Eigen::Index>(nugget_ix)));
    return pr.fixed_nugget.value_or(0.0);
  };
  auto field_of = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    const Eigen::MatrixXd& L = cache.get(range_of(x));
    Eigen::VectorXd f = L.triangularView<Eigen::Lower>() * x.segment(static_cast<Eigen::Index>(zs0), ni);
    f *= std::exp(x(static_cast<Eigen::Index>(sigma_ix)));
    return f;
  };
  auto lik = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd eta = field_of(x);
    eta.array() += x(0);
    if (has_nugget) eta += nugget_of(x) * x.segment(static_cast<Eigen::Index>(ze0), ni);
    const double gamma = gamma_ix == npos ? 0.0 : x(static_cast<Eigen::Index>(gamma_ix));
    const double lambda = lambda_ix == npos ? 0.0 : sigmoid(x(static_cast<Eigen::Index>(lambda_ix)));
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = eta(static_cast<Eigen::Index>(i)) + (urban[i] ? gamma : 0.0);
      if (lambda == 0.0) {
        ll += yv[i] * log_sigmoid(e) + (nv[i] - yv[i]) * log_sigmoid(-e);
      } else {
        const double p = sigmoid(e);
        if (!(p > 0.0 && p < 1.0 && lambda < 1.0)) return -std::numeric_limits<double>::infinity();
        ll += betabinomial_logpmf(static_cast<std::int64_t>(yv[i]), static_cast<std::int64_t>(nv[i]), p, lambda);
      }
    }
    return ll;
  };
  auto hyper_prior = [&](const Eigen::VectorXd& x) {
    double lp = 0.0;
    const double ls = x(static_cast<Eigen::Index>(sigma_ix));
    lp += pc_prior_sd_logdensity(std::exp(ls), pr.sigma_U, pr.sigma_alpha) + ls;
    if (range_ix != npos) {
      const double lr = x(static_cast<Eigen::Index>(range_ix));
      lp += pc_prior_range_logdensity(std::exp(lr), rho0, pr.range_alpha) + lr;
    }
    if (nugget_ix != npos) {
      const double le = x(static_cast<Eigen::Index>(nugget_ix));
      lp += pc_prior_sd_logdensity(std::exp(le), pr.nugget_U, pr.nugget_alpha) + le;
    }
    if (lambda_ix != npos) {
      const double eta = x(static_cast<Eigen::Index>(lambda_ix));
      lp += sqrt_exponential_logdensity(sigmoid(eta), spec.lambda_U, spec.lambda_alpha) + log_sigmoid(eta) +
            log_sigmoid(-eta);
    }
    return lp;
  };
  auto fixed_prior = [&](const Eigen::VectorXd& x) {
    double lp = normal_logdensity(x(0), 0.0, pr.fixed_effect_sd);
    if (gamma_ix != npos) lp += normal_logdensity(x(static_cast<Eigen::Index>(gamma_ix)), 0.0, pr.fixed_effect_sd);
    return lp;
  };
  const Eigen::Index latent0 = static_cast<Eigen::Index>(zs0);
  const Eigen::Index latent_len = static_cast<Eigen::Index>(has_nugget ? 2 * n : n);
  prob.log_posterior = [&](const Eigen::VectorXd& x) {
    const double hp = hyper_prior(x);
    if (!std::isfinite(hp)) return hp;
    return lik(x) + fixed_prior(x) + hp - 0.5 * x.segment(latent0, latent_len).squaredNorm();
  };

  Block fixed;
  fixed.name = "fixed";
  fixed.indices.push_back(0);
  if (gamma_ix != npos) fixed.indices.push_back(gamma_ix);
  fixed.conditional = [&](const Eigen::VectorXd& x) { return lik(x) + fixed_prior(x); };
  fixed.initial_scale = 0.05;
  prob.blocks.push_back(fixed);
  Block hyper;
  hyper.name = "hyper";
  for (std::size_t ix : {lambda_ix, sigma_ix, range_ix, nugget_ix}) {
    if (ix != npos) hyper.indices.push_back(ix);
  }
  hyper.conditional = [&](const Eigen::VectorXd& x) {
    const double hp = hyper_prior(x);
    if (!std::isfinite(hp)) return hp;
    return lik(x) + hp;
  };
  hyper.initial_scale = 0.1;
  prob.blocks.push_back(hyper);

  // Elliptical slice sampling on the standard-normal latent vector.
  Block ess;
  ess.name = "latent";
  ess.kernel = [&](Eigen::VectorXd& x, Rng& rng) {
    const Eigen::VectorXd z0 = x.segment(latent0, latent_len);
    Eigen::VectorXd nu(latent_len);
    for (Eigen::Index i = 0; i < latent_len; ++i) nu(i) = rng.normal();
    const double log_y = lik(x) + std::log(rng.uniform_open_closed());
    double theta = 2.0 * std::numbers::pi * rng.uniform();
    double lo = theta - 2.0 * std::numbers::pi;
    double hi = theta;
    for (int guard = 0; guard < 200; ++guard) {
      x.segment(latent0, latent_len) = z0 * std::cos(theta) + nu * std::sin(theta);
      if (lik(x) > log_y) return;
      if (theta < 0.0) {
        lo = theta;
      } else {
        hi = theta;
      }
      theta = lo + (hi - lo) * rng.uniform();
    }
    x.segment(latent0, latent_len) = z0;
  };
  prob.blocks.push_back(ess);

  fit.posterior = run_chains(prob, spec.mcmc);
  const Eigen::MatrixXd draws = fit.posterior.pooled();
  const Eigen::Index r_n = draws.rows();
  fit.intercept = draws.col(0);
  fit.gamma = gamma_ix == npos ? Eigen::VectorXd::Zero(r_n) : Eigen::VectorXd(draws.col(static_cast<Eigen::Index>(gamma_ix)));
  fit.sigma = draws.col(static_cast<Eigen::Index>(sigma_ix)).array().exp();
  fit.range = range_ix == npos ? Eigen::VectorXd::Constant(r_n, *pr.fixed_range)
                               : Eigen::VectorXd(draws.col(static_cast<Eigen::Index>(range_ix)).array().exp());
  fit.nugget = nugget_ix == npos ? Eigen::VectorXd::Constant(r_n, pr.fixed_nugget.value_or(0.0))
                                 : Eigen::VectorXd(draws.col(static_cast<Eigen::Index>(nugget_ix)).array().exp());
  fit.field.resize(r_n, ni);
  for (Eigen::Index r = 0; r < r_n; ++r) fit.field.row(r) = field_of(draws.row(r).transpose()).transpose();
  return fit;
}

Eigen::MatrixXd predict_field(const GpFit& fit, const std::vector<Point2>& points, std::uint64_t seed) {
  Rng rng(seed);
  const auto n = static_cast<Eigen::Index>(fit.sites.size());
  const auto m = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd out(fit.field.rows(), m);
  double last_range = std::numeric_limits<double>::quiet_NaN();
  Eigen::LLT<Eigen::MatrixXd> llt_sites;
  Eigen::MatrixXd A;       // K_ps K_ss^-1 (correlation scale)
  Eigen::MatrixXd L_cond;  // Cholesky of the conditional correlation
  for (Eigen::Index r = 0; r < fit.field.rows(); ++r) {
    const double range = fit.range(r);
    if (!(range == last_range)) {
      const MaternParams corr{1.0, range, fit.smoothness};
      Eigen::MatrixXd Rss = matern_matrix(fit.sites, corr);
      Rss.diagonal().array() += fit.jitter;
      llt_sites.compute(Rss);
      if (llt_sites.info() != Eigen::Success) throw NumericError("Cholesky failure in conditional simulation");
      const Eigen::MatrixXd Rps = matern_cross(points, fit.sites, corr);
      A = llt_sites.solve(Rps.transpose()).transpose();
      Eigen::MatrixXd C = matern_matrix(points, corr) - A * Rps.transpose();
      C = 0.5 * (C + C.transpose());
      C.diagonal().array() += fit.jitter;
      Eigen::LLT<Eigen::MatrixXd> llt_c(C);
      if (llt_c.info() != Eigen::Success) {
        // Fall back to an eigen square root when the conditional covariance is
        // numerically semidefinite (points on top of sites).
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
        L_cond = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
      } else {
        L_cond = llt_c.matrixL();
      }
      last_range = range;
    }
    Eigen::VectorXd z(m);
    for (Eigen::Index i = 0; i < m; ++i) z(i) = rng.normal();
    const Eigen::VectorXd mean = A * fit.field.row(r).transpose();
    out.row(r) = (mean + fit.sigma(r) * (L_cond * z)).transpose();
  }
  (void)n;
  return out;
}

PixelGrid read_pixel_csv(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  PixelGrid grid;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    Pixel p;
    p.area_id = t.text(r, "area_id");
    p.location = {t.number(r, "lon"), t.number(r, "lat")};
    p.weight = t.number(r, "weight");
    p.urban = t.has_column("urban") ? t.flag(r, "urban") : false;
    if (!(p.weight >= 0.0)) {
      throw ValidationError(path.string() + " line " + std::to_string(t.line_of(r)) + ": weight must be >= 0");
    }
    grid.push_back(std::move(p));
  }
  return grid;
}

Eigen::MatrixXd aggregate_pixels(const Eigen::MatrixXd& pixel_risk, const PixelGrid& grid,
                                 const std::vector<std::string>& areas) {
  if (static_cast<std::size_t>(pixel_risk.cols()) != grid.size()) throw ValidationError("one risk column per pixel required");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(pixel_risk.rows(), static_cast<Eigen::Index>(areas.size()));
  for (std::size_t a = 0; a < areas.size(); ++a) {
    double total = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      if (grid[j].area_id == areas[a]) total += grid[j].weight;
    }
    if (!(total > 0.0)) throw ValidationError("area '" + areas[a] + "' has no pixel weight");
    for (std::size_t j = 0; j < grid.size(); ++j) {
      if (grid[j].area_id != areas[a]) continue;
      out.col(static_cast<Eigen::Index>(a)) += (grid[j].weight / total) * pixel_risk.col(static_cast<Eigen::Index>(j));
    }
  }
  return out;
}

Eigen::MatrixXd aggregate_continuous(const GpFit& fit, const PixelGrid& grid, const std::vector<std::string>& areas,
                                     std::uint64_t seed) {
  std::vector<Point2> points;
  for (const auto& p : grid) points.push_back(p.location);
  const Eigen::MatrixXd field = predict_field(fit, points, seed);
  Eigen::MatrixXd risk(field.rows(), field.cols());
  for (Eigen::Index r = 0; r < field.rows(); ++r) {
    for (Eigen::Index j = 0; j < field.cols(); ++j) {
      const double eta = fit.intercept(r) + (grid[static_cast<std::size_t>(j)].urban ? fit.gamma(r) : 0.0) + field(r, j);
      risk(r, j) = sigmoid(eta);
    }
  }
  return aggregate_pixels(risk, grid, areas);
}

}  // namespace sae
