#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sae/mcmc.hpp"
#include "sae/priors.hpp"
#include "sae/spatial.hpp"

namespace sae {

enum class SdPrior { pc, fixed };
enum class PhiPrior { pc, uniform, fixed };

struct Bym2Priors {
  SdPrior sd = SdPrior::pc;
  double sd_U = 1.0;
  double sd_alpha = 0.01;
  double sd_value = 1.0;  // used when sd == fixed

  PhiPrior phi = PhiPrior::pc;
  double phi_U = 0.5;
  double phi_alpha = 2.0 / 3.0;
  double phi_value = 0.5;  // used when phi == fixed

  double fixed_effect_sd = 31.6;

  void validate() const;
};

// BYM2 random effect b = sigma (sqrt(1 - phi) u + sqrt(phi) s) in
// non-centred form: u iid N(0, 1), s scaled ICAR. The ICAR mean direction
// gets a N(0, 1/m) prior instead of a hard constraint; it is confounded with
// the intercept, and shift_block() moves the two together so scalar updates
// of s stay cheap and local. Occupies a contiguous run of parameters starting at `offset`:
// [log_sigma_b] [logit_phi] u_1..u_m s_1..s_m (hyperparameters only when free).
class Bym2Component {
 public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  Bym2Component(const SpatialStructure& structure, const Bym2Priors& priors, std::size_t offset);

  std::size_t size() const noexcept { return end_ - offset_; }
  std::size_t areas() const noexcept { return m_; }
  std::size_t sigma_index() const noexcept { return sigma_; }
  std::size_t phi_index() const noexcept { return phi_; }
  std::size_t u_index(std::size_t area) const noexcept { return u0_ + area; }
  std::size_t s_index(std::size_t area) const noexcept { return s0_ + area; }

  void append_names(std::vector<std::string>& names) const;
  // Writes starting values (sigma 0.5 unless fixed, phi 0.5, latent zero).
  void initialize(Eigen::VectorXd& x) const;

  double sigma(const Eigen::VectorXd& x) const;
  double phi(const Eigen::VectorXd& x) const;
  double effect(const Eigen::VectorXd& x, std::size_t area) const;
  Eigen::VectorXd effects(const Eigen::VectorXd& x) const;

  // Priors of the free hyperparameters on the sampler scale (Jacobians included).
  double hyper_logprior(const Eigen::VectorXd& x) const;
  // iid + ICAR + soft constraint, up to a constant.
  double latent_logprior(const Eigen::VectorXd& x) const;

  using AreaLikelihood = std::function<double(const Eigen::VectorXd&, std::size_t)>;
  // Adds scalar blocks for the hyperparameters (using `likelihood` for all
  // data) and for each u_i / s_i (using `area_likelihood` for area i only).
  void add_blocks(std::vector<Block>& blocks, const LogDensity& likelihood, const AreaLikelihood& area_likelihood) const;
  // Metropolis move on (intercept + sigma sqrt(phi) d, s - d), which leaves
  // every linear predictor unchanged.
  Block shift_block(std::size_t intercept_index, double intercept_prior_sd) const;
  // Effects with the ICAR mean removed (the removed part belongs to the intercept).
  Eigen::VectorXd centered_effects(const Eigen::VectorXd& x) const;

 private:
  double icar_local(const Eigen::VectorXd& x, std::size_t area) const;
  double constraint(const Eigen::VectorXd& x) const;

  const SpatialStructure* structure_;
  Bym2Priors priors_;
  std::optional<PcPhiPrior> phi_prior_;
  std::size_t m_ = 0;
  std::size_t offset_ = 0;
  std::size_t sigma_ = npos;
  std::size_t phi_ = npos;
  std::size_t u0_ = 0;
  std::size_t s0_ = 0;
  std::size_t end_ = 0;
  double constraint_sd_ = 0.0;
};

}  // namespace sae
