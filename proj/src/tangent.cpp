#include "preg/tangent.hpp"

#include <algorithm>
#include <cmath>

namespace preg::tangent {

ConeDescription compute_cone(const pfactor::Decomposition& D, const pfactor::SampleSpec& spec) {
  ConeDescription cone;
  cone.p = D.p();
  for (const auto& h : pfactor::hp_sample(D, spec)) {
    double resid = 0.0;
    for (int k = 1; k <= D.p(); ++k)
      resid = std::max(resid, D.band_form(k, D.base_point(), h).norm());
    cone.directions.push_back({h, resid});
  }
  return cone;
}

namespace {

// Damped Gauss-Newton on ||F||^2 over an affine slice y = origin + B u.
// Returns the final point; `ok` reports whether the residual tolerance was
// reached within the step budget.
Vec correct_onto_zero_set(const mapping::MappingModel& M, const Vec& origin, const Mat& basis,
                          double residual_tol, int max_steps, bool& ok) {
  Vec u = Vec::Zero(basis.cols());
  double r = M.evaluate(origin).norm();
  for (int it = 0; it < max_steps && r > residual_tol; ++it) {
    Vec y = origin + basis * u;
    Vec f = M.evaluate(y);
    Mat j = M.jacobian(y) * basis;
    Vec delta = linalg::least_squares(j, -f).x;
    double step = 1.0;
    bool improved = false;
    for (int halving = 0; halving < 20; ++halving) {
      Vec cand = u + step * delta;
      double rc = M.evaluate(origin + basis * cand).norm();
      if (rc < r) {
        u = cand;
        r = rc;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }
  ok = r <= residual_tol;
  return origin + basis * u;
}

}  // namespace

std::vector<TraceResult> trace_curves(const mapping::MappingModel& M, const Vec& xstar,
                                      const ConeDescription& cone, const TraceOptions& opts) {
  std::vector<TraceResult> results;
  for (const auto& dir : cone.directions) {
    TraceResult res;
    res.h = dir.h;
    Mat slice = linalg::Subspace(M.n(), Mat(dir.h.normalized())).orthogonal_complement().basis();
    bool all_ok = true;
    for (int j = opts.j_min; j <= opts.j_max; ++j) {
      double t = std::ldexp(1.0, -j);
      Vec probe = xstar + t * dir.h;
      double scale = std::max(1.0, M.evaluate(probe).norm());
      bool ok = false;
      Vec x = correct_onto_zero_set(M, probe, slice, opts.residual_tol * scale,
                                    opts.max_correction_steps, ok);
      CurveSample s;
      s.t = t;
      s.x = x;
      s.residual = M.evaluate(x).norm();
      s.secant = (x - xstar) / t;
      s.corrected = ok;
      s.correction_ratio = (x - probe).norm() / t;
      all_ok = all_ok && ok;
      res.samples.push_back(std::move(s));
    }
    double first = res.samples.front().correction_ratio;
    double last = res.samples.back().correction_ratio;
    // a correction already at noise level at the largest t is trivially
    // vanishing; otherwise demand a decisive downward trend
    bool trend = first <= 1e-10 || last <= first / 10.0;
    res.confirmed = all_ok && last <= opts.confirm_ratio && trend;
    results.push_back(std::move(res));
  }
  return results;
}

DistanceFit distance_estimate_check(const mapping::MappingModel& M,
                                    const pfactor::Decomposition& D, const DistanceSpec& spec) {
  DistanceFit fit;
  Rng rng(spec.seed);
  const Vec& xstar = D.base_point();
  Mat full = Mat::Identity(M.n(), M.n());

  // one direction set shared by all radii, so the per-radius fits differ
  // only through the radius itself
  std::vector<Vec> directions;
  for (int s = 0; s < spec.samples_per_radius; ++s) directions.push_back(rng.unit_vector(M.n()));

  for (double radius : spec.radii) {
    RadiusFit rf{radius, 0.0, 0.0, 0, 0};
    for (const Vec& u : directions) {
      Vec xi = xstar + radius * u;
      double scale = std::max(1.0, M.evaluate(xi).norm());
      bool ok = false;
      Vec y = correct_onto_zero_set(M, xi, full, spec.residual_tol * scale, 200, ok);
      if (!ok) {
        ++rf.dropped;
        continue;
      }
      double lhs = (y - xi).norm();  // ||x(xi)||
      double r = (xi - xstar).norm();
      double rhs1 = 0.0, rhs2 = 0.0;
      for (int k = 1; k <= D.p(); ++k) {
        double band = D.band_mapping(k, xi).norm();  // f_k(x*) = 0 at the root
        rhs1 += band / std::pow(r, k - 1);
        rhs2 += std::pow(band, 1.0 / k);
      }
      rf.delta1 = std::max(rf.delta1, lhs / std::max(rhs1, 1e-300));
      rf.delta2 = std::max(rf.delta2, lhs / std::max(rhs2, 1e-300));
      ++rf.samples;
    }
    fit.dropped += rf.dropped;
    fit.delta1 = std::max(fit.delta1, rf.delta1);
    fit.delta2 = std::max(fit.delta2, rf.delta2);
    fit.per_radius.push_back(rf);
  }

  auto stable = [](auto get) {
    return [get](const std::vector<RadiusFit>& v) {
      double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
      for (const auto& rf : v) {
        if (rf.samples == 0) return false;
        lo = std::min(lo, get(rf));
        hi = std::max(hi, get(rf));
      }
      return lo > 0.0 && hi / lo < 2.0;
    };
  };
  fit.stable = stable([](const RadiusFit& r) { return r.delta1; })(fit.per_radius) &&
               stable([](const RadiusFit& r) { return r.delta2; })(fit.per_radius);
  return fit;
}

}  // namespace preg::tangent
