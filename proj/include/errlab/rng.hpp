// Seeded, stream-splittable random number generation.
//
// The core sequence is counter-based (a SplitMix64-style finalizer over
// seed/stream/counter), so any (seed, stream_id) pair names a reproducible
// stream regardless of what other streams were drawn from in the meantime.
// Integer output is bit-identical everywhere; Gaussian output additionally
// goes through libm (log/sqrt), so it is bit-identical per platform/build.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "errlab/errors.hpp"

namespace errlab {

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace detail

class RngState {
 public:
  explicit RngState(std::uint64_t seed = 0, std::uint64_t stream_id = 0)
      : seed_(seed),
        stream_id_(stream_id),
        key_(detail::mix64(detail::mix64(seed) ^
                           detail::mix64(stream_id ^ 0xA0761D6478BD642FULL))) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // A fresh stream sharing this state's seed. Streams are independent of the
  // draw position of their parent.
  RngState stream(std::uint64_t stream_id) const {
    return RngState(seed_, stream_id);
  }

  std::uint64_t next_u64() {
    return detail::mix64(key_ + 0x9E3779B97F4A7C15ULL * ++counter_);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer on [0, n). Rejection keeps the distribution exact.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw DomainError("RngState::below: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  // Standard normal via Marsaglia's polar method; the spare value of each
  // accepted pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_id_ = 0;
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Fisher-Yates shuffle driven by the given stream.
template <typename T>
void shuffle(std::vector<T>& v, RngState& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace errlab
