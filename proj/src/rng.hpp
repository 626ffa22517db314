#pragma once

#include <cstdint>
#include <cmath>
#include <cstddef>
#include <string_view>

namespace ecqed {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Deterministic RNG with pinned bit-level behavior. The std:: distributions
// are implementation-defined, which would break the reproducibility contract.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {
    // decorrelate trivial seeds
    splitmix64(state_);
  }

  uint64_t next_u64() { return splitmix64(state_); }

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // index in [0, n)
  size_t uniform_index(size_t n) {
    return static_cast<size_t>(next_u64() % n);
  }

  // standard normal via Box-Muller
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // derive an independent stream, e.g. per purpose or per epoch
  Rng fork(uint64_t salt) {
    uint64_t s = state_ ^ (salt * 0x9e3779b97f4a7c15ULL + 0x7f4a7c15ULL);
    return Rng(splitmix64(s));
  }

 private:
  uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ecqed
