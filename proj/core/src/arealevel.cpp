#include "sae/arealevel.hpp"

#include <algorithm>
#include <cmath>

#include "sae/error.hpp"
#include "sae/priors.hpp"

namespace sae {

Eigen::MatrixXd design_with_intercept(const Eigen::MatrixXd& covariates, std::size_t areas) {
  const auto m = static_cast<Eigen::Index>(areas);
  if (covariates.size() > 0 && covariates.rows() != m) {
    throw ValidationError("covariate matrix has " + std::to_string(covariates.rows()) + " rows, expected " +
                          std::to_string(areas));
  }
  const Eigen::Index p = covariates.size() > 0 ? covariates.cols() : 0;
  Eigen::MatrixXd X(m, p + 1);
  X.col(0).setOnes();
  if (p > 0) X.rightCols(p) = covariates;
  if (!X.allFinite()) throw ValidationError("covariates must be finite");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < X.cols()) throw ValidationError("covariate matrix (with intercept) is rank-deficient");
  return X;
}

AreaModelFit fit_smoothed_direct(const SmoothedDirectSpec& spec) {
  const SpatialStructure& g = spec.structure;
  const std::size_t m = g.size();
  const Eigen::MatrixXd X = design_with_intercept(spec.covariates, m);
  const auto p = static_cast<std::size_t>(X.cols());

  AreaModelFit out;
  out.area_ids = g.nodes();
  Eigen::VectorXd z = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
  Eigen::VectorXd prec = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));  // 0 = no data
  for (const auto& a : spec.data.areas) {
    if (!g.contains(a.area_id)) {
      throw ValidationError("area '" + a.area_id + "' in the estimates is not in the adjacency graph");
    }
    const auto i = static_cast<Eigen::Index>(g.index_of(a.area_id));
    if (std::find(spec.held_out.begin(), spec.held_out.end(), a.area_id) != spec.held_out.end()) {
      out.dropped_areas.push_back(a.area_id + ": held out");
      continue;
    }
    if (a.logit_var && !std::isfinite(*a.logit_var)) throw ValidationError("non-finite V for area '" + a.area_id + "'");
    if (!a.usable()) {
      std::string why = a.has_flag("boundary") ? "boundary estimate" : a.has_flag("no_sample")      ? "no sample"
                        : a.has_flag("zero_variance") ? "zero design variance"
                                                      : "no usable variance";
      out.dropped_areas.push_back(a.area_id + ": " + why);
      continue;
    }
    z(i) = *a.logit_est;
    prec(i) = 1.0 / *a.logit_var;
    out.used_areas.push_back(a.area_id);
  }
  if (out.used_areas.empty()) throw ValidationError("no area has a usable direct estimate (all boundary or missing)");
  if (out.used_areas.size() < 3) throw ValidationError("the area-level model needs at least 3 areas with usable estimates");

  Bym2Component bym2(g, spec.priors, p);
  Problem prob;
  for (std::size_t k = 0; k < p; ++k) {
    prob.names.push_back(k == 0 ? "beta[intercept]" : "beta[" + spec.covariate_names.at(k - 1) + "]");
  }
  bym2.append_names(prob.names);
  prob.init = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p + bym2.size()));
  bym2.initialize(prob.init);
  {
    // Weighted least squares start for beta on the usable areas.
    Eigen::MatrixXd A(0, static_cast<Eigen::Index>(p));
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < prec.size(); ++i) {
      if (prec(i) > 0.0) rows.push_back(i);
    }
    A.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(p));
    Eigen::VectorXd b(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      A.row(static_cast<Eigen::Index>(r)) = X.row(rows[r]);
      b(static_cast<Eigen::Index>(r)) = z(rows[r]);
    }
    if (rows.size() >= p) {
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
      if (qr.rank() == static_cast<Eigen::Index>(p)) {
        prob.init.head(static_cast<Eigen::Index>(p)) = qr.solve(b);
      } else {
        prob.init(0) = b.mean();
      }
    } else {
      prob.init(0) = b.mean();
    }
  }
  prob.init_jitter = 0.1;

  const double fe_sd = spec.priors.fixed_effect_sd;
  auto theta_i = [&X, &bym2, p](const Eigen::VectorXd& x, std::size_t i) {
    return X.row(static_cast<Eigen::Index>(i)).dot(x.head(static_cast<Eigen::Index>(p))) + bym2.effect(x, i);
  };
  auto area_lik = [&z, &prec, theta_i](const Eigen::VectorXd& x, std::size_t i) {
    const auto k = static_cast<Eigen::Index>(i);
    if (prec(k) == 0.0) return 0.0;
    const double r = z(k) - theta_i(x, i);
    return -0.5 * r * r * prec(k);
  };
  auto lik = [area_lik, m](const Eigen::VectorXd& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += area_lik(x, i);
    return s;
  };
  auto beta_prior = [p, fe_sd](const Eigen::VectorXd& x) {
    double s = 0.0;
    for (std::size_t k = 0; k < p; ++k) s += normal_logdensity(x(static_cast<Eigen::Index>(k)), 0.0, fe_sd);
    return s;
  };
  prob.log_posterior = [&, lik, beta_prior](const Eigen::VectorXd& x) {
    return lik(x) + beta_prior(x) + bym2.hyper_logprior(x) + bym2.latent_logprior(x);
  };
  Block beta;
  beta.name = "beta";
  for (std::size_t k = 0; k < p; ++k) beta.indices.push_back(k);
  beta.conditional = [lik, beta_prior](const Eigen::VectorXd& x) { return lik(x) + beta_prior(x); };
  beta.initial_scale = 0.1;
  prob.blocks.push_back(beta);
  bym2.add_blocks(prob.blocks, lik, area_lik);
  prob.blocks.push_back(bym2.shift_block(0, fe_sd));

  out.posterior = run_chains(prob, spec.mcmc);
  const Eigen::MatrixXd draws = out.posterior.pooled();
  out.theta.resize(draws.rows(), static_cast<Eigen::Index>(m));
  for (Eigen::Index r = 0; r < draws.rows(); ++r) {
    const Eigen::VectorXd x = draws.row(r).transpose();
    out.theta.row(r) = (X * x.head(static_cast<Eigen::Index>(p)) + bym2.effects(x)).transpose();
  }
  out.prevalence = out.theta.unaryExpr([](double t) { return 1.0 / (1.0 + std::exp(-t)); });
  return out;
}

std::vector<Summary> posterior_prevalence(const Eigen::MatrixXd& draws, double level) {
  std::vector<Summary> out;
  for (Eigen::Index a = 0; a < draws.cols(); ++a) out.push_back(summarize(Eigen::VectorXd(draws.col(a)), level));
  return out;
}

}  // namespace sae
