#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rhtamp {

using ObjectId = std::string;

// splitmix64, used both as the PRNG core and to derive per-call seeds from
// structured inputs. Bit-stable across platforms, unlike <random>
// distributions.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_mix(std::uint64_t seed, std::uint64_t v) {
  return mix64(seed ^ (v + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2)));
}

inline std::uint64_t hash_str(std::uint64_t seed, std::string_view s) {
  std::uint64_t h = 1469598103934665603ull ^ seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return mix64(h);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // [0, n)
  int uniform_int(int n) {
    return static_cast<int>(next() % static_cast<std::uint64_t>(n));
  }

  bool chance(double p) { return uniform() < p; }

  double gaussian(double sigma) {
    // Box-Muller, no caching so the draw count per call is fixed.
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    return sigma * std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586 * u2);
  }

  // Redraws until |g| <= k*sigma.
  double truncated_gaussian(double sigma, double k) {
    for (;;) {
      double g = gaussian(sigma);
      if (std::abs(g) <= k * sigma) return g;
    }
  }

 private:
  std::uint64_t state_;
};

// Deterministic cost model. All reported durations and all budget
// enforcement are charged from these constants; wall-clock time never
// enters any result artifact, which is what makes repeated runs
// byte-identical.
struct CostModel {
  double task_expand = 2e-4;   // per expanded search node
  double ik_call = 5e-4;       // per analytic IK invocation
  double config_check = 1e-3;  // per full collision query
  double sample_draw = 1e-4;   // per sampled grasp/place candidate
  double joint_speed = 1.0;    // rad/s, max-norm across joints
  double base_speed = 0.3;     // m/s
  double gripper_act = 1.0;    // s per grasp/release actuation
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SceneError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PreconditionError : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace rhtamp
