#include "sae/priors.hpp"

#include <cmath>
#include <numbers>

#include "sae/error.hpp"

namespace sae {

double pc_sd_rate(double U, double alpha) {
  if (!(U > 0.0) || !(alpha > 0.0 && alpha < 1.0)) {
    throw ValidationError("PC prior needs U > 0 and 0 < alpha < 1");
  }
  return -std::log(alpha) / U;
}

double pc_prior_sd_logdensity(double sigma, double U, double alpha) {
  const double rate = pc_sd_rate(U, alpha);
  if (!(sigma > 0.0)) throw ValidationError("PC prior on a standard deviation needs sigma > 0");
  return std::log(rate) - rate * sigma;
}

double sqrt_exponential_logdensity(double x, double U, double alpha) {
  const double rate = pc_sd_rate(U, alpha);
  if (!(x > 0.0)) throw ValidationError("sqrt-exponential prior needs x > 0");
  const double r = std::sqrt(x);
  return std::log(rate) - rate * r - std::log(2.0 * r);
}

double pc_prior_range_logdensity(double range, double rho0, double alpha) {
  if (!(rho0 > 0.0) || !(alpha > 0.0 && alpha < 1.0)) {
    throw ValidationError("range PC prior needs rho0 > 0 and 0 < alpha < 1");
  }
  if (!(range > 0.0)) throw ValidationError("range PC prior needs range > 0");
  const double lambda = -rho0 * std::log(alpha);
  return std::log(lambda) - 2.0 * std::log(range) - lambda / range;
}

double normal_logdensity(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

namespace {

// x - log1p(x), accurate near zero.
double x_minus_log1p(double x) {
  if (std::abs(x) < 1e-4) return x * x * (0.5 - x * (1.0 / 3.0 - x * 0.25));
  return x - std::log1p(x);
}

// Pr(d > a) for a truncated exponential with rate t on [0, D].
double tail(double t, double a, double D) {
  if (std::abs(t * D) < 1e-10) return 1.0 - a / D;
  return std::expm1(t * (D - a)) / std::expm1(t * D);
}

}  // namespace

PcPhiPrior::PcPhiPrior(const SpatialStructure& structure, double U, double alpha)
    : PcPhiPrior(std::span<const double>(structure.scaled_eigenvalues().data(),
                                         static_cast<std::size_t>(structure.scaled_eigenvalues().size())),
                 U, alpha) {}

PcPhiPrior::PcPhiPrior(std::span<const double> eigenvalues, double U, double alpha) {
  if (eigenvalues.empty()) throw ValidationError("phi prior needs at least one non-null eigenvalue");
  for (double l : eigenvalues) {
    if (!(l > 0.0)) throw ValidationError("phi prior needs positive non-null eigenvalues");
    g_minus_one_.push_back(1.0 / l - 1.0);
  }
  if (!(U > 0.0 && U < 1.0) || !(alpha > 0.0 && alpha < 1.0)) {
    throw ValidationError("phi prior needs 0 < U < 1 and 0 < alpha < 1");
  }
  build(U, alpha);
}

double PcPhiPrior::kld(double phi) const {
  double s = 0.0;
  for (double g : g_minus_one_) s += x_minus_log1p(phi * g);
  return 0.5 * s;
}

double PcPhiPrior::kld_derivative(double phi) const {
  double s = 0.0;
  for (double g : g_minus_one_) s += g * (phi * g) / (1.0 + phi * g);
  return 0.5 * s;
}

double PcPhiPrior::distance(double phi) const { return std::sqrt(2.0 * kld(phi)); }

double PcPhiPrior::upper_tail(double u) const {
  if (u <= 0.0) return 1.0;
  if (u >= 1.0) return 0.0;
  return tail(rate_, distance(u), d_max_);
}

void PcPhiPrior::build(double U, double alpha) {
  d_max_ = distance(1.0);
  if (!(d_max_ > 0.0) || !std::isfinite(d_max_)) {
    throw NumericError("phi prior: distance at phi = 1 is not positive and finite");
  }
  const double a = distance(U);
  // tail() decreases in the rate; bracket in units of 1/D and bisect.
  double lo = -500.0 / d_max_;
  double hi = 500.0 / d_max_;
  if (!(tail(lo, a, d_max_) >= alpha && tail(hi, a, d_max_) <= alpha)) {
    throw NumericError("phi prior: cannot calibrate rate for Pr(phi > U) = alpha");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (tail(mid, a, d_max_) > alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  rate_ = 0.5 * (lo + hi);
  if (std::abs(tail(rate_, a, d_max_) - alpha) > 1e-8) throw NumericError("phi prior: rate calibration did not converge");
  // Density of d: t exp(-t d) / (1 - exp(-t D)), or 1/D when t is ~0.
  if (std::abs(rate_ * d_max_) < 1e-10) {
    log_norm_ = -std::log(d_max_);
  } else {
    log_norm_ = std::log(rate_ / -std::expm1(-rate_ * d_max_));
  }
  table_.resize(kGridPoints);
  const double step = (kGridHi - kGridLo) / static_cast<double>(kGridPoints - 1);
  for (std::size_t k = 0; k < kGridPoints; ++k) {
    const double eta = kGridLo + step * static_cast<double>(k);
    table_[k] = log_density_exact(1.0 / (1.0 + std::exp(-eta)));
  }
}

double PcPhiPrior::log_density_exact(double phi) const {
  if (!(phi > 0.0 && phi < 1.0)) throw ValidationError("phi prior: phi must lie in (0, 1)");
  const double d = distance(phi);
  double jac = 0.0;
  if (d < 1e-8) {
    // d ~ phi sqrt(sum g^2 / 2) near the base model.
    double s2 = 0.0;
    for (double g : g_minus_one_) s2 += g * g;
    jac = std::sqrt(0.5 * s2);
  } else {
    jac = kld_derivative(phi) / d;
  }
  return log_norm_ - rate_ * d + std::log(jac);
}

double PcPhiPrior::log_density(double phi) const {
  if (!(phi > 0.0 && phi < 1.0)) throw ValidationError("phi prior: phi must lie in (0, 1)");
  const double eta = std::log(phi / (1.0 - phi));
  if (eta <= kGridLo || eta >= kGridHi) return log_density_exact(phi);
  const double step = (kGridHi - kGridLo) / static_cast<double>(kGridPoints - 1);
  const double pos = (eta - kGridLo) / step;
  const auto k = static_cast<std::size_t>(pos);
  const double f = pos - static_cast<double>(k);
  return (1.0 - f) * table_[k] + f * table_[k + 1];
}

}  // namespace sae
