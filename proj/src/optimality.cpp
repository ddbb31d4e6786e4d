#include "preg/optimality.hpp"

#include <cmath>

namespace preg::optimality {

EqualityProblem::EqualityProblem(mapping::MappingModel objective,
                                 std::optional<mapping::MappingModel> constraint, Vec xstar,
                                 double feasibility_tol)
    : objective_(std::move(objective)), constraint_(std::move(constraint)),
      xstar_(std::move(xstar)) {
  if (objective_.m() != 1)
    throw std::invalid_argument("EqualityProblem: objective must be scalar valued");
  if (xstar_.size() != objective_.n())
    throw std::invalid_argument("EqualityProblem: candidate point dimension mismatch");
  if (constraint_) {
    if (constraint_->n() != objective_.n())
      throw std::invalid_argument("EqualityProblem: constraint variable count mismatch");
    double feas = constraint_->evaluate(xstar_).norm();
    if (feas > feasibility_tol)
      throw std::invalid_argument("EqualityProblem: candidate infeasible, ||F(x*)|| = " +
                                  std::to_string(feas));
  }
}

Vec EqualityProblem::objective_gradient(const Vec& x) const {
  return objective_.jacobian(x).row(0).transpose();
}

Mat EqualityProblem::objective_hessian(const Vec& x) const {
  return objective_.derivative_at(2, x).combine_components(Vec::Ones(1));
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::FailsNecessary: return "fails-necessary";
    case Verdict::NecessaryOnly: return "necessary-only";
    case Verdict::NecessarySufficient: return "necessary+sufficient";
    case Verdict::Vacuous: return "vacuous";
  }
  return "unknown";
}

namespace {

void require_constraint_consistency(const EqualityProblem& P, const pfactor::Decomposition* D) {
  if (P.constraint() && !D)
    throw std::invalid_argument("optimality: constrained problem needs a decomposition");
  if (D && D->n() != P.n())
    throw std::invalid_argument("optimality: decomposition dimension mismatch");
}

}  // namespace

LagrangeCertificate solve_multiplier(const EqualityProblem& P, const pfactor::Decomposition* D,
                                     const Vec& h, double residual_tol) {
  require_constraint_consistency(P, D);
  if (h.size() != P.n()) throw std::invalid_argument("solve_multiplier: h dimension mismatch");
  if (h.norm() == 0.0) throw std::invalid_argument("solve_multiplier: h must be nonzero");

  LagrangeCertificate cert;
  cert.h = h;
  Vec grad = P.objective_gradient(P.xstar());

  if (!P.constraint()) {
    cert.lambda = Vec::Zero(0);
    cert.first_order_residual = grad.norm();
    cert.necessary = cert.first_order_residual <= residual_tol;
    cert.hp_member = true;  // no constraint forms to annihilate
    cert.regular_along_h = true;
    return cert;
  }

  cert.hp_member = pfactor::hp_membership(*D, h, D->config().membership_tol);
  cert.regular_along_h = pfactor::is_p_regular_along(*D, h).regular;

  pfactor::FactorOperator psi = pfactor::factor_operator(*D, h);
  auto ls = linalg::least_squares(psi.psi.transpose(), -grad, D->config().rank_tol);
  cert.lambda = ls.x;
  cert.first_order_residual = ls.residual;
  cert.necessary = cert.first_order_residual <= residual_tol;
  return cert;
}

void second_order_check(const EqualityProblem& P, const pfactor::Decomposition* D,
                        LagrangeCertificate& cert, double alpha_floor) {
  require_constraint_consistency(P, D);
  const Vec& h = cert.h;
  Mat hess = P.objective_hessian(P.xstar());

  if (P.constraint()) {
    const auto& F = *P.constraint();
    int degree = 0;
    for (const auto& comp : F.system().components())
      degree = std::max(degree, comp.degree());
    // band k of Lbar carries weight 2/(k(k+1)) on <lambda, F_k^(k-1)(x)[h]^{k-1}>;
    // its x-Hessian is the (k+1)-derivative contracted k-1 times with h,
    // weighted by the band-projected multiplier
    for (int k = 1; k <= D->p(); ++k) {
      if (k + 1 > degree) continue;  // order beyond the polynomial degree: exact zero
      double w = 2.0 / (k * (k + 1));
      Vec band_lambda = D->band_projector(k) * cert.lambda;
      expr::SymTensor t = F.contract(k + 1, P.xstar(), h, k - 1);
      hess += w * t.combine_components(band_lambda);
    }
  }

  cert.second_order_ran = true;
  cert.v = h.dot(hess * h);
  cert.v_normalized = cert.v / h.squaredNorm();
  cert.sufficient_at_h = cert.v >= alpha_floor * h.squaredNorm();
}

CertifyReport certify(const EqualityProblem& P, const pfactor::Decomposition* D,
                      const pfactor::SampleSpec& spec, double residual_tol, double alpha_floor) {
  require_constraint_consistency(P, D);
  CertifyReport rep;

  std::vector<Vec> cone;
  if (P.constraint()) {
    cone = pfactor::hp_sample(*D, spec);
  } else {
    // no constraints: every direction is admissible; sample the sphere
    Rng rng(spec.seed);
    for (int i = 0; i < spec.budget; ++i) cone.push_back(rng.unit_vector(P.n()));
  }

  if (cone.empty()) {
    rep.verdict = Verdict::Vacuous;
    return rep;
  }

  bool all_necessary = true;
  bool all_sufficient = true;
  double alpha = std::numeric_limits<double>::infinity();
  for (const auto& h : cone) {
    LagrangeCertificate cert = solve_multiplier(P, D, h, residual_tol);
    second_order_check(P, D, cert, alpha_floor);
    all_necessary = all_necessary && cert.necessary;
    all_sufficient = all_sufficient && cert.sufficient_at_h;
    alpha = std::min(alpha, cert.v_normalized);
    rep.certificates.push_back(std::move(cert));
  }
  rep.alpha_estimate = alpha;
  rep.verdict = !all_necessary ? Verdict::FailsNecessary
                : all_sufficient ? Verdict::NecessarySufficient
                                 : Verdict::NecessaryOnly;
  return rep;
}

ClassicalCheck classical_multiplier_check(const EqualityProblem& P) {
  Vec grad = P.objective_gradient(P.xstar());
  if (!P.constraint()) return {Vec::Zero(0), grad.norm()};
  Mat jt = P.constraint()->jacobian(P.xstar()).transpose();
  auto ls = linalg::least_squares(jt, -grad);
  return {ls.x, ls.residual};
}

}  // namespace preg::optimality
