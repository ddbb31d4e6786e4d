#pragma once

#include <optional>
#include <vector>

#include "preg/expr.hpp"
#include "preg/mapping.hpp"
#include "preg/solvers.hpp"
#include "preg/types.hpp"

namespace preg::conlag {

// min phi(x) subject to g_i(x) <= 0, all polynomial over shared variables.
struct ConstrainedProblem {
  expr::PolySystem objective;    // m = 1
  expr::PolySystem constraints;  // g_1..g_m, convention g_i(x) <= 0

  ConstrainedProblem(expr::PolySystem obj, expr::PolySystem cons);
  int n() const { return objective.n(); }
  int num_constraints() const { return constraints.m(); }
};

struct KKTPoint {
  Vec x;
  Vec lambda;
  std::vector<int> active;           // |g_j(x)| <= tol
  std::vector<int> weakly_active;    // active and |lambda_j| <= tol
  std::vector<int> strongly_active;  // active \ weakly active
};

// The square system G(x, lambda) = (grad phi + 1/2 sum lambda_i^2 grad g_i;
// lambda_i g_i(x)) over R^{n+m}, assembled symbolically so all derivative
// tensors are exact. Carries the 2-factor direction once classified.
class ModLagSystem {
 public:
  ModLagSystem(mapping::MappingModel G, int nx, int nconstraints);

  const mapping::MappingModel& mapping() const { return G_; }
  int nx() const { return nx_; }
  int nconstraints() const { return m_; }
  int dim() const { return nx_ + m_; }

  void set_direction(Vec h);
  const std::optional<Vec>& direction() const { return h_; }

  // Phi(w) = G(w) + G'(w) h and its derivative Phi'(w) = G'(w) + G''(w) h.
  Vec phi(const Vec& w) const;
  Mat phi_prime(const Vec& w) const;

 private:
  mapping::MappingModel G_;
  int nx_, m_;
  std::optional<Vec> h_;
};

ModLagSystem build_system(const ConstrainedProblem& P);

struct DirectionInfo {
  KKTPoint point;
  Vec h;            // zero x-block, ones at weakly active multiplier slots
  int s = 0;        // number of weakly active constraints
  bool degenerate = false;  // s > 0; otherwise classical Newton on G suffices
};

// Classify the active sets at the candidate and build the direction of the
// 2-factor scheme. Candidates must be feasible with lambda >= 0 within tol.
DirectionInfo classify_and_build_h(const ModLagSystem& S, const ConstrainedProblem& P,
                                   const Vec& x, const Vec& lambda, double tol = 1e-8);

// w_{k+1} = w_k - [G'(w_k) + G''(w_k)h]^{-1} (G(w_k) + G'(w_k)h). With
// h = 0 this is classical Newton on G.
solvers::SolveReport two_factor_solve(const ModLagSystem& S, const Vec& w0,
                                      const solvers::SolveOptions& opts = {});

struct LemmaCertificate {
  bool cqc = false;             // active-constraint gradients linearly independent
  bool cone_positive = false;   // z^T Hess_L z > 0 over the active cone
  double cone_min_ratio = std::numeric_limits<double>::quiet_NaN();
  bool phi_prime_nonsingular = false;
  Mat phi_prime;                // Phi'(w*)
  Mat V;                        // Hess_xx of the modified Lagrangian at (x*, lambda*)
  Mat Q;                        // active gradients, weakly active first
  Vec Dn;                       // g_j(x*) over inactive constraints
  int cone_samples = 0;
};

// The nonsingularity certificate for the 2-factor operator at the
// candidate: constraint qualification, second-order cone positivity
// (sampled directions plus extreme rays for small n), and a direct rank
// test of Phi'(w*). Also reports the block data (V, Q, D_N) whose
// assembled form equals Phi'(w*) up to index ordering.
LemmaCertificate lemma_certificate(const ModLagSystem& S, const ConstrainedProblem& P,
                                   const DirectionInfo& info, int cone_budget = 1000,
                                   std::uint64_t seed = kDefaultSeed,
                                   double rank_tol = linalg::kAutoTol);

}  // namespace preg::conlag
