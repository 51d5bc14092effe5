#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace bsdef {

namespace detail {

// splitmix64 finalizer; full-avalanche mix of a 64-bit word.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// Seeded, splittable random stream.  A stream is identified by (seed,
// stream_id); identical identifiers reproduce identical sequences, distinct
// stream_ids give statistically independent sequences.  substream() derives
// child streams cheaply, so per-worker streams can be keyed by loop index
// and parallel execution reproduces the serial results.
//
// Engine: xoshiro256** seeded through splitmix64.  Satisfies
// UniformRandomBitGenerator, so standard <random> distributions apply.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
      : seed_(seed), stream_id_(stream_id) {
    key_ = detail::mix64(detail::mix64(seed) ^
                         (0xbf58476d1ce4e5b9ULL * (stream_id + 1)));
    std::uint64_t x = key_;
    for (auto& s : state_) s = detail::mix64(x += 0x9e3779b97f4a7c15ULL);
  }

  // Child stream keyed by id; independent of this stream and of siblings.
  RngStream substream(std::uint64_t id) const { return RngStream(key_, id); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<std::uint64_t>::max();
  }

  result_type operator()() {
    const std::uint64_t result = detail::rotl64(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl64(state_[3], 45);
    return result;
  }

  // U[0,1)
  double uniform() { return ((*this)() >> 11) * 0x1.0p-53; }

  // U(0,1), both endpoints excluded
  double uniform_oo() { return (((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  double normal() {
    std::normal_distribution<double> dist;
    return dist(*this);
  }

  double exponential() { return -std::log(uniform_oo()); }

 private:
  std::uint64_t state_[4];
  std::uint64_t key_;
  std::uint64_t seed_;
  std::uint64_t stream_id_;
};

// Fills a vector with independent N(0,1) draws using one distribution
// instance (keeps the spare variate within the call).
inline void fill_standard_normal(std::vector<double>& out, RngStream& rng) {
  std::normal_distribution<double> dist;
  for (auto& v : out) v = dist(rng);
}

// Uniform time partition of [t0, T] into n_steps steps.
struct TimeGrid {
  double t0 = 0.0;
  double T = 1.0;
  int n_steps = 1;

  TimeGrid() = default;
  TimeGrid(double t0_, double T_, int n_steps_)
      : t0(t0_), T(T_), n_steps(n_steps_) {
    if (n_steps < 1) throw std::invalid_argument("TimeGrid: n_steps < 1");
    if (!(dt() > 0.0)) throw std::invalid_argument("TimeGrid: dt must be > 0");
  }

  double dt() const { return (T - t0) / n_steps; }
  double time(int n) const { return t0 + n * dt(); }
};

}  // namespace bsdef
