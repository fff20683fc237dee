#pragma once

#include <cmath>
#include <cstdint>

namespace cgl {

/// Counter-based generator: SplitMix64 over a Weyl sequence. Each stream is
/// identified by a 64-bit key; substreams are derived by remixing the key, so
/// replicas and purposes (clock, kicks, coupling) never share state.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key = 0) : state_(mix(key ^ kInit)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~std::uint64_t{0}; }

  result_type operator()() {
    state_ += kGamma;
    return mix(state_);
  }

  /// Independent stream keyed off this one's current state.
  CounterRng derive(std::uint64_t tag) const {
    return CounterRng(mix(state_ ^ mix(tag + kGamma)));
  }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform01() { return double((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_pos() { return 1.0 - uniform01(); }

  /// Exponential with rate lambda; strictly positive.
  double exponential(double lambda) { return -std::log(uniform_pos()) / lambda; }

  /// Standard normal via Box-Muller (no state caching, keeps streams simple).
  double normal() {
    double u1 = uniform_pos();
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  /// Uniform on [-1, 1).
  double symmetric() { return 2.0 * uniform01() - 1.0; }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
  static constexpr std::uint64_t kInit = 0x8BADF00D5EEDC0DEull;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

/// Per-replica stream bundle. The coupled-step construction needs the clock,
/// the kick coordinates and the coupling accept/reject draws on separate
/// streams (shared waiting times, shared high modes, independent low-mode
/// coupling randomness).
struct ReplicaRng {
  CounterRng clock;
  CounterRng kicks;
  CounterRng coupling;
  CounterRng init;

  static ReplicaRng make(std::uint64_t seed, std::uint64_t replica) {
    CounterRng root = CounterRng(seed).derive(replica + 1);
    return ReplicaRng{root.derive(1), root.derive(2), root.derive(3), root.derive(4)};
  }
};

}  // namespace cgl
