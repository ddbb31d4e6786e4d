#pragma once

#include <stdexcept>
#include <vector>

#include "preg/linalg.hpp"
#include "preg/mapping.hpp"
#include "preg/types.hpp"

namespace preg::pfactor {

struct Config {
  double rank_tol = linalg::kAutoTol;
  double membership_tol = 1e-8;   // kernel-membership tolerance
  std::uint64_t seed = kDefaultSeed;
  int span_budget = 0;            // 0 = max(3*n*m, 64) sampled directions per band
};

// Raised when the direct sum Y_1 + ... + Y_p does not exhaust R^m at the
// order cap; carries the dimensions that were achieved.
class DecompositionIncomplete : public std::runtime_error {
 public:
  DecompositionIncomplete(int achieved, int ambient, std::vector<int> dims)
      : std::runtime_error("decomposition incomplete: reached dimension " +
                           std::to_string(achieved) + " of " + std::to_string(ambient) +
                           " at the order cap"),
        achieved_(achieved), ambient_(ambient), band_dims_(std::move(dims)) {}
  int achieved() const { return achieved_; }
  int ambient() const { return ambient_; }
  const std::vector<int>& band_dims() const { return band_dims_; }

 private:
  int achieved_, ambient_;
  std::vector<int> band_dims_;
};

// The subspace chain Y_1, ..., Y_p with orthoprojectors, built at a base
// point. Bands are pairwise orthogonal and sum to R^m. Band k carries the
// k-th projected mapping F_k = P_{Y_k} F.
class Decomposition {
 public:
  Decomposition(mapping::MappingModel model, Vec base_point, std::vector<linalg::Subspace> bands,
                Config config);

  int p() const { return static_cast<int>(bands_.size()); }
  int n() const { return model_.n(); }
  int m() const { return model_.m(); }
  const mapping::MappingModel& model() const { return model_; }
  const Vec& base_point() const { return base_; }
  const Config& config() const { return config_; }

  // 1-based band accessors, matching the chain Y_1..Y_p.
  const linalg::Subspace& band(int k) const { return bands_.at(k - 1); }
  const Mat& band_projector(int k) const { return projectors_.at(k - 1); }

  // P_{Y_k} F^(k)(x)[h]^{k-1}: the k-th term of the factor operator at x.
  Mat band_operator(int k, const Vec& x, const Vec& h) const;
  // P_{Y_k} F^(k)(x)[h]^k: the k-form whose kernel enters H_p.
  Vec band_form(int k, const Vec& x, const Vec& h) const;
  // F_k(x) = P_{Y_k} F(x).
  Vec band_mapping(int k, const Vec& x) const;

 private:
  mapping::MappingModel model_;
  Vec base_;
  std::vector<linalg::Subspace> bands_;
  std::vector<Mat> projectors_;
  Config config_;
};

// Construct the chain at x*: Y_1 = Im F'(x*), then inductively the span of
// the projected i-form image inside the orthogonal complement of the bands
// so far, stopping at the minimal p that exhausts R^m. The span of each
// homogeneous form is taken over a seeded sample of directions.
Decomposition build_decomposition(const mapping::MappingModel& M, const Vec& xstar, int p_cap,
                                  const Config& config = {});

// Psi_p(h) = F'_1(x*) + F''_2(x*)h + ... + F^(p)_p(x*)[h]^{p-1}.
struct FactorOperator {
  Vec h;
  Mat psi;                 // m x n
  std::vector<Mat> terms;  // per-band contributions, band k at index k-1
  int rank;
  bool surjective;
};

FactorOperator factor_operator(const Decomposition& D, const Vec& h);

struct RegularityCheck {
  bool regular;              // Im Psi_p(h) = R^m
  bool crosscheck_ran;
  bool crosscheck_regular;   // image of the top band restricted to Ker Psi_{p-1}(h) fills Y_p
  bool agrees;
};

RegularityCheck is_p_regular_along(const Decomposition& D, const Vec& h,
                                   bool with_crosscheck = false);

// ||F_k^(k)(x*)[h]^k|| <= tol * ||h||^k for every band k.
bool hp_membership(const Decomposition& D, const Vec& h, double tol = 1e-8);

struct SampleSpec {
  int budget = 64;                 // sphere starts
  std::uint64_t seed = kDefaultSeed;
  double membership_tol = 1e-8;
  double dedup_angle = 1e-3;       // radians
  int refine_spawn = 8;            // extra starts near each accepted direction
};

// Unit directions in H_p(x*), found by driving the stacked band forms to
// zero on the sphere from seeded starts; deduplicated by angular distance.
std::vector<Vec> hp_sample(const Decomposition& D, const SampleSpec& spec);

struct StrongRegularityEstimate {
  enum class Outcome { Finite, Unbounded, EmptyBand } outcome;
  double sup_inverse_norm;  // max right-inverse norm over accepted samples
  int accepted;
  int budget;
};

// Sup of ||Psi_p(h)^{-1}|| over sampled unit h with all band forms below
// alpha in norm.
StrongRegularityEstimate strong_regularity_estimate(const Decomposition& D, double alpha,
                                                    int budget, std::uint64_t seed);

class SingularFactorMatrix : public std::runtime_error {
 public:
  SingularFactorMatrix(int rank, int dim)
      : std::runtime_error("factor matrix is singular (rank " + std::to_string(rank) + " of " +
                           std::to_string(dim) + "); h is not a usable direction"),
        rank_(rank) {}
  int rank() const { return rank_; }

 private:
  int rank_;
};

// Cumulative projection chain for the p-factor Newton scheme: complement
// projectors of the nested images Y_1 = Im F'(x*),
// Y_{k+1} = Im(F'(x*) + sum over decreasing tuples of Pbar products times
// higher derivative contractions), the combined projectors
// P_1 = sum Pbar_i, P_{j} = sum of ordered products, and the factor matrix
// F'(x*) + P_1 F''(x*)h + ... + P_{p-1} F^(p)(x*)[h]^{p-1}.
class NewtonChain {
 public:
  NewtonChain(Vec h, int p, std::vector<Mat> pbar, std::vector<Mat> combined, Mat factor_matrix);

  int p() const { return p_; }
  const Vec& h() const { return h_; }
  const std::vector<Mat>& pbar() const { return pbar_; }            // Pbar_1..Pbar_{p-1}
  const std::vector<Mat>& combined() const { return combined_; }    // P_1..P_{p-1}
  const Mat& factor_matrix() const { return factor_; }

  // Iteration matrix F'(x) + sum_j P_j F^(j+1)(x)[h]^j at an arbitrary x.
  Mat iteration_matrix(const mapping::MappingModel& M, const Vec& x) const;
  // Modified residual F(x) + sum_j P_j F^(j)(x)[h]^j.
  Vec modified_residual(const mapping::MappingModel& M, const Vec& x) const;

 private:
  Vec h_;
  int p_;
  std::vector<Mat> pbar_;
  std::vector<Mat> combined_;
  Mat factor_;
};

// Assemble the chain without gating on factor-matrix rank; used to inspect
// degenerate directions.
NewtonChain assemble_newton_chain(const mapping::MappingModel& M, const Vec& xstar, const Vec& h,
                                  int p, double rank_tol = linalg::kAutoTol);

// Throws SingularFactorMatrix when the assembled factor matrix (evaluated
// at x*) is rank deficient.
NewtonChain build_newton_chain(const mapping::MappingModel& M, const Vec& xstar, const Vec& h,
                               int p, double rank_tol = linalg::kAutoTol);

}  // namespace preg::pfactor
