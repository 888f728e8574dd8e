#pragma once

// Seeded, platform-independent random streams. std:: distributions are
// implementation-defined, so Gaussians come from an explicit Box-Muller on
// uniform 53-bit draws; identical seeds give identical output everywhere.

#include "freespec/linalg.hpp"

#include <cstdint>
#include <random>

namespace freespec {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Derives an independent stream seed for (master, lane, rep).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t lane, std::uint64_t rep) {
  std::uint64_t s = master;
  std::uint64_t a = splitmix64(s);
  s ^= lane * 0xD1B54A32D192ED03ULL + 0x2545F4914F6CDD1DULL;
  std::uint64_t b = splitmix64(s);
  s ^= rep * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL;
  return a ^ b ^ splitmix64(s);
}

class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : eng_(seed) {}

  double uniform() {  // (0, 1]
    return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  Complex complex_normal() {  // E|z|^2 = 2
    return Complex(normal(), normal());
  }

  /// GUE-normalized Hermitian matrix: entry variance 1/n, empirical second
  /// moment -> 1 as n grows.
  CMatrix gue(Eigen::Index n) {
    CMatrix a(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i) a(i, j) = complex_normal();
    CMatrix h = (a + a.adjoint()) / (2.0 * std::sqrt(static_cast<double>(n)));
    return h;
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace freespec
