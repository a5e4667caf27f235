#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace optlab {

// splitmix64 finalizer; used to derive independent child streams.
std::uint64_t mix_u64(std::uint64_t x);
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Deterministic RNG. mt19937_64 has a standard-pinned state transition, but
// the std distributions do not, so all mappings to uniform/normal/int are
// implemented here to keep byte-level reproducibility across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [0, n); n > 0. Unbiased via rejection.
  std::int64_t uniform_int(std::int64_t n);
  // Standard normal via Box-Muller (deterministic, caches the spare).
  double normal();
  double normal(double mean, double stddev);
  // Normal(0, stddev) resampled until |x| <= 2*stddev.
  double truncated_normal(double stddev);

  // Independent stream derived from this rng's seed and a tag.
  Rng child(std::uint64_t stream) const { return Rng(mix_seed(seed_, stream)); }

  // Full state round-trip (for resumable training).
  std::string save_state() const;
  void load_state(const std::string& s);

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace optlab
