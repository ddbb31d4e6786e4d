#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "preg/mapping.hpp"
#include "preg/pfactor.hpp"
#include "preg/types.hpp"

namespace preg::solvers {

enum class Status { Converged, Diverged, SingularMatrix, MaxIterations };

std::string to_string(Status s);

struct IterationRecord {
  int k = 0;
  Vec x;
  double residual = 0.0;       // ||F(x_k)|| or the modified residual
  double step_norm = 0.0;      // ||x_k - x_{k-1}||, 0 at k = 0
  double dist_to_root = std::numeric_limits<double>::quiet_NaN();
  double cond = std::numeric_limits<double>::quiet_NaN();  // iteration matrix estimate
};

struct SolveReport {
  Status status = Status::MaxIterations;
  std::vector<IterationRecord> history;
  Vec final_x;
  bool root_known = false;
  Vec root;
  // least-squares fit of log||e_{k+1}|| = log c + 2 log||e_k|| when the
  // root is known and enough steps exist; NaN otherwise
  double fitted_c = std::numeric_limits<double>::quiet_NaN();
};

struct SolveOptions {
  double tol = 1e-10;
  int max_iter = 50;
  double rank_tol = linalg::kAutoTol;
  double divergence_bound = 1e100;
  std::optional<Vec> root;  // declared root for error tracking
};

// x_{k+1} = x_k - F'(x_k)^{-1} F(x_k); requires a square system. A rank
// deficient Jacobian at any iterate stops the run with SingularMatrix.
SolveReport classical_newton(const mapping::MappingModel& M, const Vec& x0,
                             const SolveOptions& opts = {});

// The p-factor scheme: projectors and h frozen from the chain, derivative
// contractions re-evaluated at each iterate. Stops when both the modified
// residual and the step norm fall below tol.
SolveReport pfactor_newton(const mapping::MappingModel& M, const Vec& x0,
                           const pfactor::NewtonChain& chain, const SolveOptions& opts = {});

// Shared driver for Newton-type schemes: `matrix` gives the step matrix,
// `residual` the quantity driven to zero. Solves use partial-pivoted
// elimination with a condition estimate recorded per step.
SolveReport newton_like(const Vec& x0, const SolveOptions& opts, bool require_small_step,
                        const std::function<Mat(const Vec&)>& matrix,
                        const std::function<Vec(const Vec&)>& residual);

struct RatioAnalysis {
  std::vector<double> ratios;  // ||e_{k+1}|| / ||e_k||^2 per step
  double c = 0.0;              // max over stabilized steps
};

// Quadratic-rate diagnostics; requires at least 3 iterates. Steps with
// ||e_k|| < 1e-8 are excluded from the fitted constant as roundoff floor.
RatioAnalysis convergence_ratio(const SolveReport& report, const Vec& root);

}  // namespace preg::solvers
