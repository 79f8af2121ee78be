#ifndef NPMIX_RNG_HPP
#define NPMIX_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace npmix {

/// Deterministic random source. All variates are derived from raw mt19937_64
/// output with fixed arithmetic, so a seed reproduces the same stream on any
/// platform (the std distribution adaptors do not guarantee that).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1), never returns an endpoint.
  double uniform01_open() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

  /// Uniform on the half-open interval (0, a].
  double uniform_left_open(double a) { return a * (1.0 - uniform01()); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller; consumes exactly two uniforms.
  double normal() {
    const double u1 = uniform01_open();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Standard exponential.
  double exponential() { return -std::log(uniform01_open()); }

  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }

  /// One draw from the uniform (flat) Dirichlet on the m-simplex.
  std::vector<double> dirichlet_uniform(std::size_t m) {
    std::vector<double> out(m);
    double total = 0.0;
    for (auto& v : out) {
      v = exponential();
      total += v;
    }
    for (auto& v : out) v /= total;
    return out;
  }

 private:
  std::mt19937_64 gen_;
};

/// Stable sub-seed for a named pipeline step: adding steps never perturbs the
/// streams of existing ones.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view step) {
  // FNV-1a over the step name, mixed with the master seed by splitmix64.
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : step) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::uint64_t z = master + 0x9e3779b97f4a7c15ull + h;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace npmix

#endif
