#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sae/rng.hpp"

namespace sae {

struct ChainConfig {
  std::size_t n_iter = 20000;
  std::size_t burn_in = 10000;
  std::size_t thin = 10;
  std::size_t n_chains = 2;
  std::uint64_t seed = 1;
  double target_acceptance_scalar = 0.44;
  double target_acceptance_block = 0.234;
  // Burn-in iterations between refreshes of a block's proposal covariance.
  std::size_t adapt_window = 100;
  // Worker threads for chains; 0 means one per chain.
  std::size_t threads = 0;

  void validate() const;  // throws ValidationError
  std::size_t retained() const { return (n_iter - burn_in) / thin; }
};

using LogDensity = std::function<double(const Eigen::VectorXd&)>;

// A group of coordinates updated together.
struct Block {
  std::string name;
  std::vector<std::size_t> indices;
  // Terms of the log posterior that involve this block (anything else may be
  // dropped). When unset the full log posterior is evaluated.
  LogDensity conditional;
  // Replaces the random-walk update entirely (e.g. elliptical slice sampling).
  std::function<void(Eigen::VectorXd& state, Rng& rng)> kernel;
  double initial_scale = 0.5;
};

struct Problem {
  std::vector<std::string> names;
  LogDensity log_posterior;
  std::vector<Block> blocks;
  Eigen::VectorXd init;
  // Each chain starts from init plus N(0, init_jitter^2) noise per coordinate.
  double init_jitter = 0.0;
};

// Everything needed to continue a chain exactly where it stopped.
struct ChainState {
  Eigen::VectorXd x;
  std::vector<double> log_scales;
  std::vector<Eigen::MatrixXd> proposal_chol;  // empty matrix for scalar/kernel blocks
  std::string rng;
  std::size_t iteration = 0;
};

struct PosteriorFit {
  std::vector<std::string> names;
  std::vector<Eigen::MatrixXd> draws;                // per chain: retained x parameters
  std::vector<std::string> block_names;
  std::vector<std::vector<double>> acceptance;       // per chain, per block (post burn-in)
  std::vector<double> rhat;                           // NaN where within-chain variance is zero
  std::vector<ChainState> burn_in_states;             // state right after burn-in, per chain

  std::size_t index_of(const std::string& name) const;  // throws ValidationError
  Eigen::MatrixXd pooled() const;                      // chains stacked
  Eigen::VectorXd pooled_column(std::size_t index) const;
  Eigen::VectorXd pooled_column(const std::string& name) const { return pooled_column(index_of(name)); }
  std::size_t total_draws() const;
  // Largest finite r-hat, or NaN when none is available.
  double max_rhat() const;
};

PosteriorFit run_chains(const Problem& problem, const ChainConfig& config);

// Continues one chain from a saved state to iteration n_iter, returning the
// retained draws. Adaptation is off; the state must come from after burn-in.
Eigen::MatrixXd continue_chain(const Problem& problem, const ChainConfig& config, const ChainState& state);

// Split r-hat. `chains` holds one draws matrix per chain (iterations x parameters).
// Throws ValidationError with fewer than two chains. Zero within-chain
// variance gives NaN for that parameter.
std::vector<double> gelman_rubin(const std::vector<Eigen::MatrixXd>& chains);

// Long format: iteration,chain,parameter,value. `columns` selects parameters (all when empty).
void write_draws_csv(const PosteriorFit& fit, const std::filesystem::path& path,
                     const std::vector<std::size_t>& columns = {});

}  // namespace sae
