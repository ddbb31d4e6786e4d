#include "preg/conlag.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace preg::conlag {

using expr::Polynomial;

ConstrainedProblem::ConstrainedProblem(expr::PolySystem obj, expr::PolySystem cons)
    : objective(std::move(obj)), constraints(std::move(cons)) {
  if (objective.m() != 1)
    throw std::invalid_argument("ConstrainedProblem: objective must be scalar");
  if (objective.n() != constraints.n())
    throw std::invalid_argument("ConstrainedProblem: variable counts differ");
}

ModLagSystem::ModLagSystem(mapping::MappingModel G, int nx, int nconstraints)
    : G_(std::move(G)), nx_(nx), m_(nconstraints) {
  if (G_.n() != nx_ + m_ || G_.m() != nx_ + m_)
    throw std::invalid_argument("ModLagSystem: G must be square over R^{n+m}");
}

void ModLagSystem::set_direction(Vec h) {
  if (h.size() != dim()) throw std::invalid_argument("ModLagSystem: direction dimension");
  h_ = std::move(h);
}

Vec ModLagSystem::phi(const Vec& w) const {
  if (!h_) throw std::logic_error("ModLagSystem: direction not set");
  return G_.evaluate(w) + G_.jacobian(w) * *h_;
}

Mat ModLagSystem::phi_prime(const Vec& w) const {
  if (!h_) throw std::logic_error("ModLagSystem: direction not set");
  return G_.jacobian(w) + G_.contract_to_matrix(2, w, *h_);
}

ModLagSystem build_system(const ConstrainedProblem& P) {
  const int n = P.n();
  const int m = P.num_constraints();
  const int dim = n + m;

  // lift a polynomial in x to the (x, lambda) variable list
  auto lift = [&](const Polynomial& p) {
    std::vector<expr::Monomial> terms;
    for (const auto& t : p.terms()) {
      expr::Monomial lifted;
      lifted.coeff = t.coeff;
      lifted.exps = t.exps;
      lifted.exps.resize(dim, 0);
      terms.push_back(std::move(lifted));
    }
    return Polynomial(dim, std::move(terms));
  };

  std::vector<Polynomial> components;
  components.reserve(dim);

  // grad_x of L_E = grad phi + 1/2 sum_i lambda_i^2 grad g_i
  for (int j = 0; j < n; ++j) {
    Polynomial comp = lift(P.objective.component(0).derivative(j));
    for (int i = 0; i < m; ++i) {
      Polynomial lam_sq = Polynomial::variable(dim, n + i).pow(2);
      comp = comp + lam_sq.scaled(0.5) * lift(P.constraints.component(i).derivative(j));
    }
    components.push_back(std::move(comp));
  }
  // D(lambda) g(x): components lambda_i * g_i(x)
  for (int i = 0; i < m; ++i)
    components.push_back(Polynomial::variable(dim, n + i) * lift(P.constraints.component(i)));

  std::vector<std::string> names = P.objective.variables();
  for (int i = 0; i < m; ++i) names.push_back("lam" + std::to_string(i + 1));

  expr::PolySystem sys(std::move(names), std::move(components));
  return ModLagSystem(mapping::MappingModel(std::move(sys)), n, m);
}

DirectionInfo classify_and_build_h(const ModLagSystem& S, const ConstrainedProblem& P,
                                   const Vec& x, const Vec& lambda, double tol) {
  if (x.size() != S.nx() || lambda.size() != S.nconstraints())
    throw std::invalid_argument("classify_and_build_h: dimension mismatch");

  Vec g = P.constraints.eval(x);
  for (int i = 0; i < g.size(); ++i) {
    if (g[i] > tol)
      throw std::invalid_argument("classify_and_build_h: candidate is infeasible (g_" +
                                  std::to_string(i + 1) + " > 0)");
    if (lambda[i] < -tol)
      throw std::invalid_argument("classify_and_build_h: negative multiplier lambda_" +
                                  std::to_string(i + 1));
  }

  DirectionInfo info;
  info.point.x = x;
  info.point.lambda = lambda;
  for (int i = 0; i < g.size(); ++i) {
    if (std::abs(g[i]) <= tol) {
      info.point.active.push_back(i);
      if (std::abs(lambda[i]) <= tol)
        info.point.weakly_active.push_back(i);
      else
        info.point.strongly_active.push_back(i);
    }
  }
  info.s = static_cast<int>(info.point.weakly_active.size());
  info.degenerate = info.s > 0;
  info.h = Vec::Zero(S.dim());
  for (int i : info.point.weakly_active) info.h[S.nx() + i] = 1.0;
  return info;
}

solvers::SolveReport two_factor_solve(const ModLagSystem& S, const Vec& w0,
                                      const solvers::SolveOptions& opts) {
  if (!S.direction()) throw std::logic_error("two_factor_solve: direction not set");
  if (w0.size() != S.dim()) throw std::invalid_argument("two_factor_solve: w0 dimension");
  return solvers::newton_like(
      w0, opts, /*require_small_step=*/true,
      [&](const Vec& w) { return S.phi_prime(w); }, [&](const Vec& w) { return S.phi(w); });
}

namespace {

// Extreme rays of {z : <a_j, z> <= 0} for the active gradients a_j: null
// directions of (n-1)-subsets of rows, kept when they satisfy the cone.
std::vector<Vec> cone_extreme_rays(const Mat& A, double rank_tol) {
  const int n = static_cast<int>(A.cols());
  const int rows = static_cast<int>(A.rows());
  std::vector<Vec> rays;
  if (n > 8 || rows == 0) return rays;
  std::vector<int> idx(rows);
  for (int i = 0; i < rows; ++i) idx[i] = i;
  // all subsets of size n-1 (with repetition impossible); small n keeps this cheap
  std::vector<int> pick;
  auto emit = [&](const std::vector<int>& subset) {
    Mat sub(subset.size(), n);
    for (std::size_t r = 0; r < subset.size(); ++r) sub.row(r) = A.row(subset[r]);
    linalg::Subspace ker = linalg::null_space(sub, rank_tol);
    for (int c = 0; c < ker.dim(); ++c) {
      for (double sign : {1.0, -1.0}) {
        Vec z = sign * ker.basis().col(c);
        if ((A * z).maxCoeff() <= 1e-10) rays.push_back(z);
      }
    }
  };
  int want = std::min(n - 1, rows);
  std::function<void(int)> rec = [&](int start) {
    if (static_cast<int>(pick.size()) == want) {
      emit(pick);
      return;
    }
    for (int i = start; i < rows; ++i) {
      pick.push_back(idx[i]);
      rec(i + 1);
      pick.pop_back();
    }
  };
  if (want > 0) rec(0);
  return rays;
}

}  // namespace

LemmaCertificate lemma_certificate(const ModLagSystem& S, const ConstrainedProblem& P,
                                   const DirectionInfo& info, int cone_budget,
                                   std::uint64_t seed, double rank_tol) {
  LemmaCertificate cert;
  const int n = S.nx();
  const Vec& x = info.point.x;
  const Vec& lambda = info.point.lambda;

  // constraint gradients
  Mat grad_g = P.constraints.m() > 0 ? mapping::MappingModel(P.constraints).jacobian(x)
                                     : Mat::Zero(0, n);

  // CQC: gradients of active constraints linearly independent
  Mat active_grads(info.point.active.size(), n);
  for (std::size_t r = 0; r < info.point.active.size(); ++r)
    active_grads.row(r) = grad_g.row(info.point.active[r]);
  cert.cqc = linalg::rank(active_grads, rank_tol) ==
             static_cast<int>(info.point.active.size());

  // V = Hess_xx L_E(x*, lambda*) = Hess phi + 1/2 sum lambda_i^2 Hess g_i
  mapping::MappingModel obj(P.objective);
  cert.V = obj.derivative_at(2, x).combine_components(Vec::Ones(1));
  if (P.constraints.m() > 0) {
    mapping::MappingModel cons(P.constraints);
    Vec weights(P.constraints.m());
    for (int i = 0; i < weights.size(); ++i) weights[i] = 0.5 * lambda[i] * lambda[i];
    cert.V += cons.derivative_at(2, x).combine_components(weights);
  }

  // Q: weakly active gradients, then lambda_j-scaled strongly active ones
  cert.Q = Mat(n, info.point.active.size());
  int col = 0;
  for (int j : info.point.weakly_active) cert.Q.col(col++) = grad_g.row(j).transpose();
  for (int j : info.point.strongly_active)
    cert.Q.col(col++) = lambda[j] * grad_g.row(j).transpose();

  // D_N over inactive constraints
  std::vector<int> inactive;
  for (int i = 0; i < P.num_constraints(); ++i)
    if (std::find(info.point.active.begin(), info.point.active.end(), i) ==
        info.point.active.end())
      inactive.push_back(i);
  Vec g = P.constraints.eval(x);
  cert.Dn = Vec(inactive.size());
  for (std::size_t i = 0; i < inactive.size(); ++i) cert.Dn[i] = g[inactive[i]];

  // cone positivity of V over {z : <grad g_j, z> <= 0, j active}
  Rng rng(seed);
  double min_ratio = std::numeric_limits<double>::infinity();
  int tested = 0;
  auto test_dir = [&](const Vec& z) {
    double nz = z.squaredNorm();
    if (nz < 1e-20) return;
    min_ratio = std::min(min_ratio, z.dot(cert.V * z) / nz);
    ++tested;
  };
  for (const auto& ray : cone_extreme_rays(active_grads, rank_tol)) test_dir(ray);
  for (int s = 0; s < cone_budget; ++s) {
    Vec z = rng.unit_vector(n);
    if (active_grads.rows() == 0 || (active_grads * z).maxCoeff() <= 0.0) test_dir(z);
  }
  cert.cone_samples = tested;
  cert.cone_min_ratio = tested ? min_ratio : std::numeric_limits<double>::quiet_NaN();
  cert.cone_positive = tested > 0 && min_ratio > 0.0;

  // direct rank test of Phi'(w*) along the classified direction
  Vec wstar(S.dim());
  wstar << x, lambda;
  ModLagSystem with_h = S;
  with_h.set_direction(info.h);
  cert.phi_prime = with_h.phi_prime(wstar);
  cert.phi_prime_nonsingular = linalg::rank(cert.phi_prime, rank_tol) == S.dim();
  return cert;
}

}  // namespace preg::conlag
