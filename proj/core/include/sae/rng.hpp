#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace sae {

// Mixes a root seed with a stream index (splitmix64 finalizer). Used to give
// every chain, replicate and held-out refit its own independent stream.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) noexcept;

// Thin wrapper over mt19937_64. Distribution objects are created per call so
// the engine state alone determines every future draw; serialize() therefore
// captures the full generator state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();                 // [0, 1)
  double uniform_open_closed();     // (0, 1]
  double uniform(double lo, double hi);
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);  // inclusive
  bool bernoulli(double p) { return uniform() < p; }
  double gamma(double shape);
  double beta(double a, double b);
  std::int64_t binomial(std::int64_t n, double p);

  std::mt19937_64& engine() noexcept { return engine_; }

  std::string serialize() const;
  static Rng deserialize(const std::string& state);

 private:
  Rng() = default;
  std::mt19937_64 engine_;
};

}  // namespace sae
