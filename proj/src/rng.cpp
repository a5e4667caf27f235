#include "rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "status.hpp"

namespace optlab {

std::uint64_t mix_u64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix_u64(mix_u64(seed) ^ mix_u64(stream * 0xd1342543de82ef95ULL + 1));
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  require(hi >= lo, Status::ArgumentError, "uniform: hi < lo");
  return lo + (hi - lo) * uniform();
}

std::int64_t Rng::uniform_int(std::int64_t n) {
  require(n > 0, Status::ArgumentError, "uniform_int: n must be positive");
  const std::uint64_t un = static_cast<std::uint64_t>(n);
  const std::uint64_t bound = un * (UINT64_MAX / un);  // reject above this
  std::uint64_t x = next_u64();
  while (x >= bound) x = next_u64();
  return static_cast<std::int64_t>(x % un);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0,1] so log() is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

double Rng::normal(double mean, double stddev) {
  return mean + stddev * normal();
}

double Rng::truncated_normal(double stddev) {
  if (stddev == 0.0) return 0.0;
  double x = normal(0.0, stddev);
  while (std::abs(x) > 2.0 * stddev) x = normal(0.0, stddev);
  return x;
}

std::string Rng::save_state() const {
  std::ostringstream os;
  os << seed_ << ' ' << gen_ << ' ' << (has_spare_ ? 1 : 0) << ' ';
  os.precision(17);
  os << spare_;
  return os.str();
}

void Rng::load_state(const std::string& s) {
  std::istringstream is(s);
  int spare_flag = 0;
  is >> seed_ >> gen_ >> spare_flag >> spare_;
  require(!is.fail(), Status::CheckpointError, "rng state: parse failure");
  has_spare_ = spare_flag != 0;
}

}  // namespace optlab
