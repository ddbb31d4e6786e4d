#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace preg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr std::uint64_t kDefaultSeed = 42;

// Deterministic random source. All sampling in the library flows through
// one of these, seeded explicitly, so runs are reproducible bit for bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  // splitmix64 step; the raw generator underneath everything else.
  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0,1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo,hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via the polar method (no hidden state).
  double gaussian() {
    for (;;) {
      double u = 2.0 * uniform() - 1.0;
      double v = 2.0 * uniform() - 1.0;
      double s = u * u + v * v;
      if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }

  Vec gaussian_vector(int n) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = gaussian();
    return v;
  }

  // Uniform direction on the unit sphere of R^n.
  Vec unit_vector(int n) {
    for (;;) {
      Vec v = gaussian_vector(n);
      double nrm = v.norm();
      if (nrm > 1e-12) return v / nrm;
    }
  }

  // Uniform point in the closed ball of the given radius.
  Vec ball_point(int n, double radius) {
    Vec u = unit_vector(n);
    double r = radius * std::pow(uniform(), 1.0 / n);
    return r * u;
  }

  // Derive an independent stream; used to give samplers their own seeds.
  std::uint64_t fork(std::uint64_t salt) const {
    Rng tmp(state_ ^ (salt * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL));
    return tmp.next_u64();
  }

 private:
  std::uint64_t state_;
};

}  // namespace preg
