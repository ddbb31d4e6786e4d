#pragma once

#include <vector>

#include "preg/mapping.hpp"
#include "preg/pfactor.hpp"
#include "preg/types.hpp"

namespace preg::tangent {

struct ConeDirection {
  Vec h;                        // unit vector
  double membership_residual;   // max_k ||F_k^(k)(x*)[h]^k||
};

struct ConeDescription {
  int p = 0;
  std::vector<ConeDirection> directions;
};

// Sampled description of the tangent cone as the common kernel of the band
// forms; empty cones are a valid outcome.
ConeDescription compute_cone(const pfactor::Decomposition& D, const pfactor::SampleSpec& spec);

struct CurveSample {
  double t;
  Vec x;                    // corrected point on {F = 0}
  double residual;          // ||F(x)||
  Vec secant;               // (x - x*) / t
  bool corrected;           // correction reached the residual tolerance
  double correction_ratio;  // ||x - (x* + t h)|| / t
};

struct TraceResult {
  Vec h;
  std::vector<CurveSample> samples;
  bool confirmed;  // corrections succeeded and the ratio trend vanishes
};

struct TraceOptions {
  int j_min = 3;   // t = 2^-j over j_min..j_max
  int j_max = 20;
  double residual_tol = 1e-12;
  int max_correction_steps = 50;
  double confirm_ratio = 1e-3;  // required at the smallest t
};

// For each cone direction, correct x* + t h back onto {F = 0} inside the
// hyperplane orthogonal to h and track how fast the correction vanishes.
std::vector<TraceResult> trace_curves(const mapping::MappingModel& M, const Vec& xstar,
                                      const ConeDescription& cone, const TraceOptions& opts = {});

struct RadiusFit {
  double radius;
  double delta1;   // max over samples of ||x(xi)|| / sum_i ||f_i(xi)|| / r^{i-1}
  double delta2;   // max over samples of ||x(xi)|| / sum_i ||f_i(xi)||^{1/i}
  int samples;
  int dropped;     // root correction failed
};

struct DistanceSpec {
  std::vector<double> radii{1e-2, 1e-3, 1e-4, 1e-5};
  int samples_per_radius = 32;
  std::uint64_t seed = kDefaultSeed;
  double residual_tol = 1e-13;
};

struct DistanceFit {
  std::vector<RadiusFit> per_radius;
  double delta1 = 0.0;  // overall fits
  double delta2 = 0.0;
  bool stable = false;  // per-radius fits vary by less than 2x
  int dropped = 0;
};

// Empirical check of the distance estimates: for seeded probes xi near x*,
// find the displacement x(xi) bringing xi back onto {F = 0} and fit the
// smallest constants making both band-sum bounds hold.
DistanceFit distance_estimate_check(const mapping::MappingModel& M,
                                    const pfactor::Decomposition& D, const DistanceSpec& spec = {});

}  // namespace preg::tangent
