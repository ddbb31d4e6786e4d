#include "preg/solvers.hpp"

#include <Eigen/LU>

#include <cmath>
#include <functional>

namespace preg::solvers {

std::string to_string(Status s) {
  switch (s) {
    case Status::Converged: return "converged";
    case Status::Diverged: return "diverged";
    case Status::SingularMatrix: return "singular-matrix";
    case Status::MaxIterations: return "max-iterations";
  }
  return "unknown";
}

namespace {

double fit_quadratic_constant(const std::vector<IterationRecord>& hist, const Vec& root) {
  // least squares on log||e_{k+1}|| = log c + 2 log||e_k||
  double acc = 0.0;
  int count = 0;
  for (std::size_t k = 0; k + 1 < hist.size(); ++k) {
    double e0 = (hist[k].x - root).norm();
    double e1 = (hist[k + 1].x - root).norm();
    if (e0 < 1e-14 || e1 < 1e-300 || e0 > 1.0) continue;
    acc += std::log(e1) - 2.0 * std::log(e0);
    ++count;
  }
  if (count == 0) return std::numeric_limits<double>::quiet_NaN();
  return std::exp(acc / count);
}

}  // namespace

SolveReport newton_like(const Vec& x0, const SolveOptions& opts, bool require_small_step,
                        const std::function<Mat(const Vec&)>& matrix,
                        const std::function<Vec(const Vec&)>& residual) {
  SolveReport rep;
  if (opts.root) {
    rep.root_known = true;
    rep.root = *opts.root;
  }
  Vec x = x0;
  double step_norm = 0.0;
  for (int k = 0; k <= opts.max_iter; ++k) {
    Vec r = residual(x);
    Mat a = matrix(x);

    IterationRecord rec;
    rec.k = k;
    rec.x = x;
    rec.residual = r.norm();
    rec.step_norm = step_norm;
    if (rep.root_known) rec.dist_to_root = (x - rep.root).norm();

    if (!r.allFinite() || x.norm() > opts.divergence_bound) {
      rep.history.push_back(std::move(rec));
      rep.status = Status::Diverged;
      break;
    }

    bool step_ok = !require_small_step || (k > 0 && step_norm <= opts.tol);
    if (rec.residual <= opts.tol && step_ok) {
      rep.history.push_back(std::move(rec));
      rep.status = Status::Converged;
      break;
    }

    if (linalg::rank(a, opts.rank_tol) < a.rows()) {
      rep.history.push_back(std::move(rec));
      rep.status = Status::SingularMatrix;
      break;
    }

    Eigen::PartialPivLU<Mat> lu(a);
    rec.cond = 1.0 / std::max(lu.rcond(), 1e-300);
    Vec step = lu.solve(r);
    rep.history.push_back(std::move(rec));

    if (k == opts.max_iter) {
      rep.status = Status::MaxIterations;
      break;
    }
    x -= step;
    step_norm = step.norm();
  }
  rep.final_x = rep.history.back().x;
  if (rep.root_known) rep.fitted_c = fit_quadratic_constant(rep.history, rep.root);
  return rep;
}

SolveReport classical_newton(const mapping::MappingModel& M, const Vec& x0,
                             const SolveOptions& opts) {
  if (M.m() != M.n())
    throw std::invalid_argument("classical_newton: system must be square (m = n)");
  if (x0.size() != M.n()) throw std::invalid_argument("classical_newton: x0 dimension");
  return newton_like(
      x0, opts, /*require_small_step=*/false,
      [&](const Vec& x) { return M.jacobian(x); },
      [&](const Vec& x) { return M.evaluate(x); });
}

SolveReport pfactor_newton(const mapping::MappingModel& M, const Vec& x0,
                           const pfactor::NewtonChain& chain, const SolveOptions& opts) {
  if (M.m() != M.n())
    throw std::invalid_argument("pfactor_newton: system must be square (m = n)");
  if (x0.size() != M.n()) throw std::invalid_argument("pfactor_newton: x0 dimension");
  return newton_like(
      x0, opts, /*require_small_step=*/true,
      [&](const Vec& x) { return chain.iteration_matrix(M, x); },
      [&](const Vec& x) { return chain.modified_residual(M, x); });
}

RatioAnalysis convergence_ratio(const SolveReport& report, const Vec& root) {
  if (report.history.size() < 3)
    throw std::invalid_argument("convergence_ratio: need at least 3 iterates");
  RatioAnalysis out;
  for (std::size_t k = 0; k + 1 < report.history.size(); ++k) {
    double e0 = (report.history[k].x - root).norm();
    double e1 = (report.history[k + 1].x - root).norm();
    if (e0 == 0.0) break;  // already at the root
    out.ratios.push_back(e1 / (e0 * e0));
    if (e0 >= 1e-8) out.c = std::max(out.c, out.ratios.back());
  }
  return out;
}

}  // namespace preg::solvers
