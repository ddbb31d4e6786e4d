#pragma once

#include <optional>
#include <string>
#include <vector>

#include "preg/mapping.hpp"
#include "preg/pfactor.hpp"
#include "preg/types.hpp"

namespace preg::optimality {

// min phi(x) subject to F(x) = 0 at a feasible candidate point. The
// constraint may be absent (unconstrained problems).
class EqualityProblem {
 public:
  EqualityProblem(mapping::MappingModel objective,
                  std::optional<mapping::MappingModel> constraint, Vec xstar,
                  double feasibility_tol = 1e-8);

  const mapping::MappingModel& objective() const { return objective_; }
  const std::optional<mapping::MappingModel>& constraint() const { return constraint_; }
  const Vec& xstar() const { return xstar_; }
  int n() const { return objective_.n(); }
  int m() const { return constraint_ ? constraint_->m() : 0; }

  Vec objective_gradient(const Vec& x) const;
  Mat objective_hessian(const Vec& x) const;

 private:
  mapping::MappingModel objective_;
  std::optional<mapping::MappingModel> constraint_;
  Vec xstar_;
};

struct LagrangeCertificate {
  Vec h;
  Vec lambda;                       // multiplier paired with the band sum
  double first_order_residual = 0;  // ||phi'(x*) + Psi_p(h)^T lambda||
  bool necessary = false;           // residual below tolerance
  bool hp_member = false;
  bool regular_along_h = false;
  bool second_order_ran = false;
  double v = std::numeric_limits<double>::quiet_NaN();  // h^T Lbar_xx h
  double v_normalized = std::numeric_limits<double>::quiet_NaN();  // v / ||h||^2
  bool sufficient_at_h = false;
};

// Multiplier from the first-order condition: minimal-norm least-squares
// solution of Psi_p(h)^T lambda = -phi'(x*). D may be null only for
// unconstrained problems.
LagrangeCertificate solve_multiplier(const EqualityProblem& P, const pfactor::Decomposition* D,
                                     const Vec& h, double residual_tol = 1e-8);

// Second-order value v(h) = h^T Lbar_xx(x*, lambda(h), h) h where Lbar
// weights the band-k constraint term by 2/(k(k+1)). Sufficiency at h
// requires v >= alpha_floor * ||h||^2.
void second_order_check(const EqualityProblem& P, const pfactor::Decomposition* D,
                        LagrangeCertificate& cert, double alpha_floor = 1e-10);

enum class Verdict { FailsNecessary, NecessaryOnly, NecessarySufficient, Vacuous };

std::string to_string(Verdict v);

struct CertifyReport {
  Verdict verdict = Verdict::Vacuous;
  std::vector<LagrangeCertificate> certificates;  // one per sampled direction
  double alpha_estimate = std::numeric_limits<double>::quiet_NaN();  // min v/||h||^2
  bool sampled = true;  // sufficiency is checked on sampled directions only
};

// Run the first- and second-order checks over sampled H_p directions and
// aggregate. An empty cone yields the vacuous verdict.
CertifyReport certify(const EqualityProblem& P, const pfactor::Decomposition* D,
                      const pfactor::SampleSpec& spec, double residual_tol = 1e-8,
                      double alpha_floor = 1e-10);

struct ClassicalCheck {
  Vec lambda;
  double residual;  // min over lambda of ||phi'(x*) + F'(x*)^T lambda||
};

// The classical Lagrange condition, no factor correction.
ClassicalCheck classical_multiplier_check(const EqualityProblem& P);

}  // namespace preg::optimality
