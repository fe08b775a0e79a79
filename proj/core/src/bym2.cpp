#include "sae/bym2.hpp"

#include <cmath>

#include "sae/error.hpp"

namespace sae {

void Bym2Priors::validate() const {
  if (sd == SdPrior::pc) pc_sd_rate(sd_U, sd_alpha);
  if (sd == SdPrior::fixed && !(sd_value > 0.0)) throw ValidationError("fixed sigma_b must be positive");
  if (phi == PhiPrior::pc && (!(phi_U > 0.0 && phi_U < 1.0) || !(phi_alpha > 0.0 && phi_alpha < 1.0))) {
    throw ValidationError("phi prior needs 0 < U < 1 and 0 < alpha < 1");
  }
  if (phi == PhiPrior::fixed && !(phi_value >= 0.0 && phi_value <= 1.0)) {
    throw ValidationError("fixed phi must lie in [0, 1]");
  }
  if (!(fixed_effect_sd > 0.0)) throw ValidationError("fixed-effect prior SD must be positive");
}

Bym2Component::Bym2Component(const SpatialStructure& structure, const Bym2Priors& priors, std::size_t offset)
    : structure_(&structure), priors_(priors), m_(structure.size()), offset_(offset) {
  priors_.validate();
  std::size_t k = offset;
  if (priors_.sd != SdPrior::fixed) sigma_ = k++;
  if (priors_.phi != PhiPrior::fixed) phi_ = k++;
  u0_ = k;
  s0_ = k + m_;
  end_ = s0_ + m_;
  if (priors_.phi == PhiPrior::pc) phi_prior_.emplace(structure, priors_.phi_U, priors_.phi_alpha);
  constraint_sd_ = std::sqrt(static_cast<double>(m_));
}

void Bym2Component::append_names(std::vector<std::string>& names) const {
  if (sigma_ != npos) names.push_back("log_sigma_b");
  if (phi_ != npos) names.push_back("logit_phi");
  for (const auto& a : structure_->nodes()) names.push_back("u[" + a + "]");
  for (const auto& a : structure_->nodes()) names.push_back("s[" + a + "]");
}

void Bym2Component::initialize(Eigen::VectorXd& x) const {
  if (sigma_ != npos) x(static_cast<Eigen::Index>(sigma_)) = std::log(0.5);
  if (phi_ != npos) x(static_cast<Eigen::Index>(phi_)) = 0.0;
  x.segment(static_cast<Eigen::Index>(u0_), static_cast<Eigen::Index>(2 * m_)).setZero();
}

double Bym2Component::sigma(const Eigen::VectorXd& x) const {
  return sigma_ == npos ? priors_.sd_value : std::exp(x(static_cast<Eigen::Index>(sigma_)));
}

double Bym2Component::phi(const Eigen::VectorXd& x) const {
  if (phi_ == npos) return priors_.phi_value;
  return 1.0 / (1.0 + std::exp(-x(static_cast<Eigen::Index>(phi_))));
}

double Bym2Component::effect(const Eigen::VectorXd& x, std::size_t i) const {
  const double p = phi(x);
  return sigma(x) * (std::sqrt(1.0 - p) * x(static_cast<Eigen::Index>(u0_ + i)) +
                     std::sqrt(p) * x(static_cast<Eigen::Index>(s0_ + i)));
}

Eigen::VectorXd Bym2Component::effects(const Eigen::VectorXd& x) const {
  const double p = phi(x);
  const auto m = static_cast<Eigen::Index>(m_);
  return sigma(x) * (std::sqrt(1.0 - p) * x.segment(static_cast<Eigen::Index>(u0_), m) +
                     std::sqrt(p) * x.segment(static_cast<Eigen::Index>(s0_), m));
}

double Bym2Component::hyper_logprior(const Eigen::VectorXd& x) const {
  double lp = 0.0;
  if (sigma_ != npos) {
    const double ls = x(static_cast<Eigen::Index>(sigma_));
    lp += pc_prior_sd_logdensity(std::exp(ls), priors_.sd_U, priors_.sd_alpha) + ls;
  }
  if (phi_ != npos) {
    const double eta = x(static_cast<Eigen::Index>(phi_));
    const double p = 1.0 / (1.0 + std::exp(-eta));
    if (!(p > 0.0 && p < 1.0)) return -std::numeric_limits<double>::infinity();
    // log(phi (1 - phi)) = -softplus(-eta) - softplus(eta)
    const double jac = -(std::log1p(std::exp(-std::abs(eta))) + std::max(eta, 0.0)) -
                       (std::log1p(std::exp(-std::abs(eta))) + std::max(-eta, 0.0));
    if (phi_prior_) lp += phi_prior_->log_density(p);
    lp += jac;
  }
  return lp;
}

double Bym2Component::constraint(const Eigen::VectorXd& x) const {
  const double sum = x.segment(static_cast<Eigen::Index>(s0_), static_cast<Eigen::Index>(m_)).sum();
  return -0.5 * (sum / constraint_sd_) * (sum / constraint_sd_);
}

double Bym2Component::icar_local(const Eigen::VectorXd& x, std::size_t i) const {
  const double si = x(static_cast<Eigen::Index>(s0_ + i));
  double ss = 0.0;
  for (std::size_t j : structure_->neighbors()[i]) {
    const double d = si - x(static_cast<Eigen::Index>(s0_ + j));
    ss += d * d;
  }
  return -0.5 * structure_->scaling_factor() * ss;
}

double Bym2Component::latent_logprior(const Eigen::VectorXd& x) const {
  const auto m = static_cast<Eigen::Index>(m_);
  double lp = -0.5 * x.segment(static_cast<Eigen::Index>(u0_), m).squaredNorm();
  double ss = 0.0;
  for (const auto& [a, b] : structure_->edges()) {
    const double d = x(static_cast<Eigen::Index>(s0_ + a)) - x(static_cast<Eigen::Index>(s0_ + b));
    ss += d * d;
  }
  lp += -0.5 * structure_->scaling_factor() * ss;
  return lp + constraint(x);
}

void Bym2Component::add_blocks(std::vector<Block>& blocks, const LogDensity& likelihood,
                               const AreaLikelihood& area_likelihood) const {
  if (sigma_ != npos) {
    blocks.push_back({"log_sigma_b", {sigma_}, [this, likelihood](const Eigen::VectorXd& x) {
                        return hyper_logprior(x) + likelihood(x);
                      }, {}, 0.3});
  }
  if (phi_ != npos) {
    blocks.push_back({"logit_phi", {phi_}, [this, likelihood](const Eigen::VectorXd& x) {
                        return hyper_logprior(x) + likelihood(x);
                      }, {}, 0.5});
  }
  for (std::size_t i = 0; i < m_; ++i) {
    blocks.push_back({"u[" + structure_->nodes()[i] + "]", {u0_ + i},
                      [this, i, area_likelihood](const Eigen::VectorXd& x) {
                        const double u = x(static_cast<Eigen::Index>(u0_ + i));
                        return -0.5 * u * u + area_likelihood(x, i);
                      }, {}, 0.8});
  }
  for (std::size_t i = 0; i < m_; ++i) {
    blocks.push_back({"s[" + structure_->nodes()[i] + "]", {s0_ + i},
                      [this, i, area_likelihood](const Eigen::VectorXd& x) {
                        return icar_local(x, i) + constraint(x) + area_likelihood(x, i);
                      }, {}, 0.8});
  }
}

Block Bym2Component::shift_block(std::size_t intercept_index, double intercept_prior_sd) const {
  Block b;
  b.name = "shift";
  b.kernel = [this, intercept_index, intercept_prior_sd](Eigen::VectorXd& x, Rng& rng) {
    const auto k = static_cast<Eigen::Index>(intercept_index);
    const auto s0 = static_cast<Eigen::Index>(s0_);
    const auto m = static_cast<Eigen::Index>(m_);
    const double c = sigma(x) * std::sqrt(phi(x));
    const double d = 2.4 / std::sqrt(static_cast<double>(m_)) * rng.normal();
    const double before = normal_logdensity(x(k), 0.0, intercept_prior_sd) + constraint(x);
    x(k) += c * d;
    x.segment(s0, m).array() -= d;
    const double after = normal_logdensity(x(k), 0.0, intercept_prior_sd) + constraint(x);
    if (std::log(rng.uniform_open_closed()) >= after - before) {
      x(k) -= c * d;
      x.segment(s0, m).array() += d;
    }
  };
  return b;
}

Eigen::VectorXd Bym2Component::centered_effects(const Eigen::VectorXd& x) const {
  Eigen::VectorXd b = effects(x);
  const double mean_s = x.segment(static_cast<Eigen::Index>(s0_), static_cast<Eigen::Index>(m_)).mean();
  b.array() -= sigma(x) * std::sqrt(phi(x)) * mean_s;
  return b;
}

}  // namespace sae
