#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ncnes::rng {

// splitmix64 step (Vigna's public-domain mixer).
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// What a stream is consumed for. Disjoint domains keep streams independent
// even when the remaining key fields collide.
enum class Domain : std::uint64_t {
  init_mean = 1,     // initial process means
  sample = 2,        // per-process per-iteration solution sampling
  reeval_count = 3,  // per-solution re-evaluation draws
  eval_noise = 4,    // additive observation noise
  episode = 5,       // episodic rollouts
  mutation = 6,      // NCS-C offspring mutation
  test = 99,         // test-only generators
};

// Deterministic pseudo-random stream addressed by (seed, domain, a, b, c).
// Any worker that derives the stream for the same key sees the same values,
// which is what makes serial and parallel executions bit-comparable.
//
// Consumption order is part of the contract: callers draw values in a
// documented, fixed order (e.g. sample k major, dimension d minor).
class Stream {
 public:
  explicit Stream(std::uint64_t seed, Domain domain, std::uint64_t a = 0,
                  std::uint64_t b = 0, std::uint64_t c = 0)
      : state_(seed) {
    mix(static_cast<std::uint64_t>(domain));
    mix(a);
    mix(b);
    mix(c);
  }

  std::uint64_t next_u64() { return splitmix64_next(state_); }

  // Uniform in (0, 1]; never 0, so log() downstream stays finite.
  double uniform01() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Inclusive [lo, hi]. Modulo bias is negligible at the spans used here.
  long uniform_int(long lo, long hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<long>(next_u64() % span);
  }

  // Standard normal via Box-Muller; the spare deviate is cached so the
  // consumption order is fully determined by the call sequence.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

 private:
  void mix(std::uint64_t v) {
    std::uint64_t field = v;
    const std::uint64_t h = splitmix64_next(field);
    state_ ^= h + 0x9e3779b97f4a7c15ULL + (state_ << 6) + (state_ >> 2);
    std::uint64_t combined = state_;
    state_ = splitmix64_next(combined);
  }

  std::uint64_t state_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ncnes::rng
