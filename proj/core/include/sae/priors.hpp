#pragma once

#include <span>
#include <vector>

#include "sae/spatial.hpp"

namespace sae {

// Rate of the exponential PC prior on a standard deviation with Pr(sigma > U) = alpha.
double pc_sd_rate(double U, double alpha);
// log(lambda) - lambda sigma.
double pc_prior_sd_logdensity(double sigma, double U, double alpha);

// Exponential prior on sqrt(x) with Pr(sqrt(x) > U) = alpha, as a density in x.
double sqrt_exponential_logdensity(double x, double U, double alpha);

// PC prior for a Matern range in two dimensions with Pr(range < rho0) = alpha:
// lambda rho^-2 exp(-lambda / rho), lambda = -rho0 log(alpha).
double pc_prior_range_logdensity(double range, double rho0, double alpha);

// Normal log density.
double normal_logdensity(double x, double mean, double sd);

// PC prior for the BYM2 mixing parameter phi. The distance from the
// all-iid base model is d(phi) = sqrt(2 KLD(phi)) with
//   KLD(phi) = 1/2 sum_k [phi (g_k - 1) - log(1 + phi (g_k - 1))],
// g_k the non-null eigenvalues of the generalized inverse of the scaled
// structure. d gets a truncated exponential on [0, d(1)] whose rate is set so
// that Pr(phi > U) = alpha; the rate may be negative when alpha exceeds the
// mass a flat prior on d would put above U.
class PcPhiPrior {
 public:
  PcPhiPrior(const SpatialStructure& structure, double U, double alpha);
  // From the non-null eigenvalues of the scaled structure itself.
  PcPhiPrior(std::span<const double> scaled_eigenvalues, double U, double alpha);

  double log_density(double phi) const;        // tabulated in logit(phi), linear interpolation
  double log_density_exact(double phi) const;
  double distance(double phi) const;
  double rate() const noexcept { return rate_; }
  // Pr(phi > u) under the prior, analytic through d.
  double upper_tail(double u) const;

 private:
  void build(double U, double alpha);
  double kld(double phi) const;
  double kld_derivative(double phi) const;

  std::vector<double> g_minus_one_;
  double d_max_ = 0.0;
  double rate_ = 0.0;
  double log_norm_ = 0.0;  // log of the truncated-exponential density constant
  std::vector<double> table_;
  static constexpr double kGridLo = -12.0;
  static constexpr double kGridHi = 12.0;
  static constexpr std::size_t kGridPoints = 4001;
};

}  // namespace sae
