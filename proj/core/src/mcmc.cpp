#include "sae/mcmc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "sae/csv.hpp"
#include "sae/error.hpp"

namespace sae {

void ChainConfig::validate() const {
  if (n_iter == 0) throw ValidationError("mcmc: n_iter must be >= 1");
  if (burn_in >= n_iter) throw ValidationError("mcmc: burn_in must be < n_iter");
  if (thin < 1) throw ValidationError("mcmc: thin must be >= 1");
  if (n_chains < 1) throw ValidationError("mcmc: n_chains must be >= 1");
  if (retained() == 0) throw ValidationError("mcmc: no draws retained; increase n_iter or reduce thin");
  if (!(target_acceptance_scalar > 0.0 && target_acceptance_scalar < 1.0) ||
      !(target_acceptance_block > 0.0 && target_acceptance_block < 1.0)) {
    throw ValidationError("mcmc: target acceptance rates must lie in (0, 1)");
  }
  if (adapt_window < 1) throw ValidationError("mcmc: adapt_window must be >= 1");
}

namespace {

constexpr std::size_t kMaxNanStreak = 1000;

void check_problem(const Problem& p) {
  const auto n = static_cast<std::size_t>(p.init.size());
  if (!p.log_posterior) throw ValidationError("mcmc: log posterior not set");
  if (p.names.size() != n) throw ValidationError("mcmc: one name per parameter required");
  if (p.blocks.empty()) throw ValidationError("mcmc: no blocks");
  for (const auto& b : p.blocks) {
    if (b.indices.empty() && !b.kernel) throw ValidationError("mcmc: block '" + b.name + "' is empty");
    for (std::size_t i : b.indices) {
      if (i >= n) throw ValidationError("mcmc: block '" + b.name + "' index out of range");
    }
    if (!(b.initial_scale > 0.0)) throw ValidationError("mcmc: block '" + b.name + "' needs a positive initial scale");
  }
}

std::string snapshot(const Problem& p, const Eigen::VectorXd& x) {
  std::string out;
  const auto n = static_cast<std::size_t>(x.size());
  for (std::size_t i = 0; i < std::min<std::size_t>(n, 24); ++i) {
    out += (i ? ", " : "") + p.names[i] + "=" + csv::format(x(static_cast<Eigen::Index>(i)));
  }
  if (n > 24) out += ", ...";
  return out;
}

class ChainRunner {
 public:
  ChainRunner(const Problem& problem, const ChainConfig& config, Rng rng)
      : p_(problem), cfg_(config), rng_(std::move(rng)) {
    const std::size_t nb = p_.blocks.size();
    log_scale_.resize(nb);
    chol_.resize(nb);
    mean_.resize(nb);
    m2_.resize(nb);
    count_.assign(nb, 0);
    accepted_.assign(nb, 0);
    attempted_.assign(nb, 0);
    for (std::size_t b = 0; b < nb; ++b) {
      const auto d = static_cast<Eigen::Index>(p_.blocks[b].indices.size());
      log_scale_[b] = std::log(p_.blocks[b].initial_scale);
      mean_[b] = Eigen::VectorXd::Zero(d);
      m2_[b] = Eigen::MatrixXd::Zero(d, d);
    }
  }

  void start_fresh() {
    x_ = p_.init;
    if (p_.init_jitter > 0.0) {
      for (Eigen::Index i = 0; i < x_.size(); ++i) x_(i) += p_.init_jitter * rng_.normal();
    }
    const double lp = p_.log_posterior(x_);
    if (std::isnan(lp)) throw NumericError("log posterior is NaN at the initial values: " + snapshot(p_, x_));
    if (!std::isfinite(lp)) throw NumericError("log posterior is not finite at the initial values: " + snapshot(p_, x_));
    iteration_ = 0;
  }

  void restore(const ChainState& s) {
    if (s.x.size() != p_.init.size() || s.log_scales.size() != p_.blocks.size() ||
        s.proposal_chol.size() != p_.blocks.size()) {
      throw ValidationError("mcmc: saved chain state does not match the problem");
    }
    x_ = s.x;
    log_scale_ = s.log_scales;
    chol_ = s.proposal_chol;
    rng_ = Rng::deserialize(s.rng);
    iteration_ = s.iteration;
  }

  ChainState state() const { return {x_, log_scale_, chol_, rng_.serialize(), iteration_}; }

  void iterate() {
    const bool adapt = iteration_ < cfg_.burn_in;
    for (std::size_t b = 0; b < p_.blocks.size(); ++b) update_block(b, adapt);
    ++iteration_;
  }

  void reset_counters() {
    std::fill(accepted_.begin(), accepted_.end(), 0);
    std::fill(attempted_.begin(), attempted_.end(), 0);
  }

  std::vector<double> acceptance() const {
    std::vector<double> out;
    for (std::size_t b = 0; b < accepted_.size(); ++b) {
      out.push_back(attempted_[b] ? static_cast<double>(accepted_[b]) / static_cast<double>(attempted_[b])
                                  : std::numeric_limits<double>::quiet_NaN());
    }
    return out;
  }

  const Eigen::VectorXd& x() const { return x_; }
  std::size_t iteration() const { return iteration_; }

 private:
  void update_block(std::size_t b, bool adapt) {
    const Block& blk = p_.blocks[b];
    if (blk.kernel) {
      blk.kernel(x_, rng_);
      return;
    }
    const LogDensity& f = blk.conditional ? blk.conditional : p_.log_posterior;
    const auto d = blk.indices.size();
    const double current = f(x_);
    old_.resize(static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < d; ++k) old_(static_cast<Eigen::Index>(k)) = x_(static_cast<Eigen::Index>(blk.indices[k]));

    const double scale = std::exp(log_scale_[b]);
    if (chol_[b].size() > 0) {
      Eigen::VectorXd z(static_cast<Eigen::Index>(d));
      for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = rng_.normal();
      Eigen::VectorXd step = chol_[b].triangularView<Eigen::Lower>() * z;
      step *= scale;
      for (std::size_t k = 0; k < d; ++k) x_(static_cast<Eigen::Index>(blk.indices[k])) += step(static_cast<Eigen::Index>(k));
    } else {
      for (std::size_t k = 0; k < d; ++k) x_(static_cast<Eigen::Index>(blk.indices[k])) += scale * rng_.normal();
    }
    const double proposed = f(x_);
    const double log_u = std::log(rng_.uniform_open_closed());
    bool accept = false;
    if (std::isnan(proposed)) {
      if (++nan_streak_ > kMaxNanStreak) {
        throw NumericError("log posterior returned NaN for " + std::to_string(kMaxNanStreak) +
                           " consecutive proposals in block '" + blk.name + "'; state: " + snapshot(p_, x_));
      }
    } else {
      nan_streak_ = 0;
      accept = log_u < proposed - current;
    }
    if (!accept) {
      for (std::size_t k = 0; k < d; ++k) x_(static_cast<Eigen::Index>(blk.indices[k])) = old_(static_cast<Eigen::Index>(k));
    }
    ++attempted_[b];
    if (accept) ++accepted_[b];

    if (!adapt) return;
    const double target = d == 1 ? cfg_.target_acceptance_scalar : cfg_.target_acceptance_block;
    const double gain = std::pow(static_cast<double>(iteration_) + 1.0, -0.6);
    log_scale_[b] += gain * ((accept ? 1.0 : 0.0) - target);
    log_scale_[b] = std::clamp(log_scale_[b], -30.0, 10.0);
    if (d > 1) adapt_covariance(b);
  }

  void adapt_covariance(std::size_t b) {
    const Block& blk = p_.blocks[b];
    const auto d = static_cast<Eigen::Index>(blk.indices.size());
    Eigen::VectorXd v(d);
    for (Eigen::Index k = 0; k < d; ++k) v(k) = x_(static_cast<Eigen::Index>(blk.indices[static_cast<std::size_t>(k)]));
    ++count_[b];
    const Eigen::VectorXd delta = v - mean_[b];
    mean_[b] += delta / static_cast<double>(count_[b]);
    m2_[b] += delta * (v - mean_[b]).transpose();
    const auto needed = static_cast<std::size_t>(2 * d + 20);
    if (count_[b] < needed || (iteration_ + 1) % cfg_.adapt_window != 0) return;
    Eigen::MatrixXd cov = m2_[b] / static_cast<double>(count_[b] - 1);
    const double ridge = 1e-8 * std::max(cov.trace() / static_cast<double>(d), 1e-12);
    cov.diagonal().array() += ridge;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) return;
    if (chol_[b].size() == 0) log_scale_[b] = std::log(2.38 / std::sqrt(static_cast<double>(d)));
    chol_[b] = llt.matrixL();
  }

  const Problem& p_;
  const ChainConfig& cfg_;
  Rng rng_;
  Eigen::VectorXd x_;
  Eigen::VectorXd old_;
  std::vector<double> log_scale_;
  std::vector<Eigen::MatrixXd> chol_;
  std::vector<Eigen::VectorXd> mean_;
  std::vector<Eigen::MatrixXd> m2_;
  std::vector<std::size_t> count_;
  std::vector<std::size_t> accepted_;
  std::vector<std::size_t> attempted_;
  std::size_t iteration_ = 0;
  std::size_t nan_streak_ = 0;
};

struct ChainOutput {
  Eigen::MatrixXd draws;
  std::vector<double> acceptance;
  ChainState burn_in_state;
};

Eigen::MatrixXd sample_to_end(ChainRunner& runner, const ChainConfig& cfg, std::size_t n_params) {
  Eigen::MatrixXd draws(static_cast<Eigen::Index>(cfg.retained()), static_cast<Eigen::Index>(n_params));
  Eigen::Index row = static_cast<Eigen::Index>((runner.iteration() - cfg.burn_in) / cfg.thin);
  while (runner.iteration() < cfg.n_iter) {
    runner.iterate();
    const std::size_t since = runner.iteration() - cfg.burn_in;
    if (since % cfg.thin == 0 && row < draws.rows()) draws.row(row++) = runner.x().transpose();
  }
  return draws;
}

ChainOutput run_one(const Problem& problem, const ChainConfig& cfg, std::size_t chain) {
  ChainRunner runner(problem, cfg, Rng(derive_seed(cfg.seed, chain)));
  runner.start_fresh();
  while (runner.iteration() < cfg.burn_in) runner.iterate();
  ChainOutput out;
  out.burn_in_state = runner.state();
  runner.reset_counters();
  out.draws = sample_to_end(runner, cfg, static_cast<std::size_t>(problem.init.size()));
  out.acceptance = runner.acceptance();
  return out;
}

}  // namespace

PosteriorFit run_chains(const Problem& problem, const ChainConfig& config) {
  config.validate();
  check_problem(problem);
  const std::size_t n = config.n_chains;
  std::vector<ChainOutput> outputs(n);
  std::vector<std::exception_ptr> errors(n);
  const std::size_t workers = std::min(n, config.threads == 0 ? n : config.threads);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t c = next++; c < n; c = next++) {
      try {
        outputs[c] = run_one(problem, config, c);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  PosteriorFit fit;
  fit.names = problem.names;
  for (const auto& b : problem.blocks) fit.block_names.push_back(b.name);
  for (auto& o : outputs) {
    fit.draws.push_back(std::move(o.draws));
    fit.acceptance.push_back(std::move(o.acceptance));
    fit.burn_in_states.push_back(std::move(o.burn_in_state));
  }
  if (n >= 2) fit.rhat = gelman_rubin(fit.draws);
  return fit;
}

Eigen::MatrixXd continue_chain(const Problem& problem, const ChainConfig& config, const ChainState& state) {
  config.validate();
  check_problem(problem);
  if (state.iteration < config.burn_in) throw ValidationError("mcmc: can only continue from a post burn-in state");
  ChainRunner runner(problem, config, Rng(0));
  runner.restore(state);
  return sample_to_end(runner, config, static_cast<std::size_t>(problem.init.size()));
}

std::vector<double> gelman_rubin(const std::vector<Eigen::MatrixXd>& chains) {
  if (chains.size() < 2) throw ValidationError("gelman_rubin needs at least two chains");
  const Eigen::Index rows = chains.front().rows();
  const Eigen::Index cols = chains.front().cols();
  for (const auto& c : chains) {
    if (c.rows() != rows || c.cols() != cols) throw ValidationError("gelman_rubin: chains differ in shape");
  }
  const Eigen::Index half = rows / 2;
  if (half < 2) throw ValidationError("gelman_rubin: chains too short");
  // Split each chain into two halves (dropping the middle draw when odd).
  std::vector<Eigen::MatrixXd> parts;
  for (const auto& c : chains) {
    parts.push_back(c.topRows(half));
    parts.push_back(c.bottomRows(half));
  }
  const auto m = static_cast<double>(parts.size());
  const auto len = static_cast<double>(half);
  std::vector<double> out;
  for (Eigen::Index j = 0; j < cols; ++j) {
    double grand = 0.0;
    std::vector<double> means;
    double w = 0.0;
    for (const auto& p : parts) {
      const double mu = p.col(j).mean();
      means.push_back(mu);
      grand += mu;
      w += (p.col(j).array() - mu).square().sum() / (len - 1.0);
    }
    grand /= m;
    w /= m;
    double b = 0.0;
    for (double mu : means) b += (mu - grand) * (mu - grand);
    b *= len / (m - 1.0);
    if (!(w > 0.0)) {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const double var_plus = (len - 1.0) / len * w + b / len;
    out.push_back(std::sqrt(var_plus / w));
  }
  return out;
}

std::size_t PosteriorFit::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ValidationError("unknown parameter '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

std::size_t PosteriorFit::total_draws() const {
  std::size_t n = 0;
  for (const auto& d : draws) n += static_cast<std::size_t>(d.rows());
  return n;
}

Eigen::MatrixXd PosteriorFit::pooled() const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(total_draws()), static_cast<Eigen::Index>(names.size()));
  Eigen::Index r = 0;
  for (const auto& d : draws) {
    out.middleRows(r, d.rows()) = d;
    r += d.rows();
  }
  return out;
}

Eigen::VectorXd PosteriorFit::pooled_column(std::size_t index) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(total_draws()));
  Eigen::Index r = 0;
  for (const auto& d : draws) {
    out.segment(r, d.rows()) = d.col(static_cast<Eigen::Index>(index));
    r += d.rows();
  }
  return out;
}

double PosteriorFit::max_rhat() const {
  double best = std::numeric_limits<double>::quiet_NaN();
  for (double r : rhat) {
    if (std::isfinite(r) && !(r <= best)) best = r;
  }
  return best;
}

void write_draws_csv(const PosteriorFit& fit, const std::filesystem::path& path, const std::vector<std::size_t>& columns) {
  std::vector<std::size_t> cols = columns;
  if (cols.empty()) {
    for (std::size_t j = 0; j < fit.names.size(); ++j) cols.push_back(j);
  }
  csv::Writer w(path, {"iteration", "chain", "parameter", "value"});
  for (std::size_t c = 0; c < fit.draws.size(); ++c) {
    const auto& d = fit.draws[c];
    for (Eigen::Index r = 0; r < d.rows(); ++r) {
      for (std::size_t j : cols) {
        w.cell(static_cast<std::int64_t>(r + 1)).cell(c + 1).cell(fit.names[j]).cell(d(r, static_cast<Eigen::Index>(j)));
        w.end_row();
      }
    }
  }
}

}  // namespace sae
