#include "preg/pfactor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace preg::pfactor {

namespace {

double angle_between(const Vec& a, const Vec& b) {
  double c = std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0);
  return std::acos(c);
}

}  // namespace

Decomposition::Decomposition(mapping::MappingModel model, Vec base_point,
                             std::vector<linalg::Subspace> bands, Config config)
    : model_(std::move(model)), base_(std::move(base_point)), bands_(std::move(bands)),
      config_(config) {
  projectors_.reserve(bands_.size());
  for (const auto& b : bands_) projectors_.push_back(linalg::orthoprojector(b).matrix);
}

Mat Decomposition::band_operator(int k, const Vec& x, const Vec& h) const {
  return band_projector(k) * model_.contract_to_matrix(k, x, h);
}

Vec Decomposition::band_form(int k, const Vec& x, const Vec& h) const {
  return band_projector(k) * model_.contract_to_vector(k, x, h);
}

Vec Decomposition::band_mapping(int k, const Vec& x) const {
  return band_projector(k) * model_.evaluate(x);
}

Decomposition build_decomposition(const mapping::MappingModel& M, const Vec& xstar, int p_cap,
                                  const Config& config) {
  if (p_cap < 1 || p_cap > M.max_order())
    throw std::invalid_argument("build_decomposition: p_cap outside [1, max_order]");
  if (xstar.size() != M.n())
    throw std::invalid_argument("build_decomposition: base point dimension mismatch");

  const int m = M.m();
  std::vector<linalg::Subspace> bands;
  bands.push_back(linalg::column_space(M.jacobian(xstar), config.rank_tol));

  int covered = bands[0].dim();
  if (covered == m) return Decomposition(M, xstar, std::move(bands), config);

  int budget = config.span_budget > 0 ? config.span_budget : std::max(3 * M.n() * M.m(), 64);
  Rng rng(config.seed);

  for (int order = 2; order <= p_cap; ++order) {
    // orthogonal complement Z of the bands built so far
    Mat stacked(m, covered);
    int c = 0;
    for (const auto& b : bands)
      for (int j = 0; j < b.dim(); ++j) stacked.col(c++) = b.basis().col(j);
    linalg::Subspace z = linalg::Subspace(m, stacked).orthogonal_complement();

    // span of the projected order-form image, computed in Z coordinates so
    // the new band stays exactly orthogonal to the earlier ones
    Mat samples(z.dim(), budget);
    for (int s = 0; s < budget; ++s) {
      Vec xi = rng.unit_vector(M.n());
      samples.col(s) = z.basis().transpose() * M.contract_to_vector(order, xstar, xi);
    }
    linalg::Subspace span_in_z = linalg::column_space(samples, config.rank_tol);

    if (span_in_z.dim() == z.dim()) {
      // span fills the remaining complement: the final band is Z itself
      bands.push_back(z);
      return Decomposition(M, xstar, std::move(bands), config);
    }
    if (order == p_cap) {
      std::vector<int> dims;
      for (const auto& b : bands) dims.push_back(b.dim());
      dims.push_back(span_in_z.dim());
      throw DecompositionIncomplete(covered + span_in_z.dim(), m, std::move(dims));
    }
    bands.emplace_back(m, Mat(z.basis() * span_in_z.basis()));
    covered += span_in_z.dim();
  }
  throw std::logic_error("build_decomposition: unreachable");
}

FactorOperator factor_operator(const Decomposition& D, const Vec& h) {
  if (h.size() != D.n()) throw std::invalid_argument("factor_operator: dimension mismatch");
  if (h.norm() == 0.0) throw std::invalid_argument("factor_operator: h must be nonzero");
  FactorOperator out;
  out.h = h;
  out.psi = Mat::Zero(D.m(), D.n());
  out.terms.reserve(D.p());
  for (int k = 1; k <= D.p(); ++k) {
    Mat term = D.band_operator(k, D.base_point(), h);
    out.psi += term;
    out.terms.push_back(std::move(term));
  }
  out.rank = linalg::rank(out.psi, D.config().rank_tol);
  out.surjective = out.rank == D.m();
  return out;
}

RegularityCheck is_p_regular_along(const Decomposition& D, const Vec& h, bool with_crosscheck) {
  FactorOperator fo = factor_operator(D, h);
  RegularityCheck rc{fo.surjective, false, false, true};
  if (!with_crosscheck || D.p() < 2) return rc;

  // equivalent condition: the top band operator, restricted to
  // Ker Psi_{p-1}(h), fills Y_p
  rc.crosscheck_ran = true;
  const int p = D.p();
  Mat psi_prev = Mat::Zero(D.m(), D.n());
  for (int k = 1; k <= p - 1; ++k) psi_prev += fo.terms[k - 1];
  linalg::Subspace kernel = linalg::null_space(psi_prev, D.config().rank_tol);
  Mat restricted = fo.terms[p - 1] * kernel.basis();
  rc.crosscheck_regular = linalg::rank(restricted, D.config().rank_tol) == D.band(p).dim();
  rc.agrees = rc.crosscheck_regular == rc.regular;
  return rc;
}

bool hp_membership(const Decomposition& D, const Vec& h, double tol) {
  if (h.size() != D.n()) throw std::invalid_argument("hp_membership: dimension mismatch");
  double hn = h.norm();
  if (hn == 0.0) throw std::invalid_argument("hp_membership: h must be nonzero");
  for (int k = 1; k <= D.p(); ++k) {
    double scale = std::pow(hn, k);
    if (D.band_form(k, D.base_point(), h).norm() > tol * scale) return false;
  }
  return true;
}

namespace {

// Stacked band forms rho(h) = sum_k F_k^(k)(x*)[h]^k; the bands are
// orthogonal, so the sum loses nothing.
Vec stacked_forms(const Decomposition& D, const Vec& h) {
  Vec r = Vec::Zero(D.m());
  for (int k = 1; k <= D.p(); ++k) r += D.band_form(k, D.base_point(), h);
  return r;
}

Mat stacked_jacobian(const Decomposition& D, const Vec& h) {
  Mat j = Mat::Zero(D.m(), D.n());
  for (int k = 1; k <= D.p(); ++k) j += k * D.band_operator(k, D.base_point(), h);
  return j;
}

// Drive the band forms to zero on the unit sphere by damped Gauss-Newton in
// the tangent plane. Returns the final point (not necessarily a member).
Vec sphere_refine(const Decomposition& D, Vec h, int max_steps = 40) {
  h.normalize();
  double r = stacked_forms(D, h).norm();
  for (int it = 0; it < max_steps && r > 1e-15; ++it) {
    Vec rho = stacked_forms(D, h);
    Mat tang = linalg::Subspace(D.n(), Mat(h)).orthogonal_complement().basis();
    if (tang.cols() == 0) break;
    Mat jt = stacked_jacobian(D, h) * tang;
    Vec delta = linalg::least_squares(jt, -rho).x;
    double step = 1.0;
    bool improved = false;
    for (int halving = 0; halving < 12; ++halving) {
      Vec cand = (h + tang * (step * delta)).normalized();
      double rc = stacked_forms(D, cand).norm();
      if (rc < r) {
        h = cand;
        r = rc;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }
  return h;
}

}  // namespace

std::vector<Vec> hp_sample(const Decomposition& D, const SampleSpec& spec) {
  Rng rng(spec.seed);
  std::vector<Vec> accepted;
  auto consider = [&](const Vec& start) {
    Vec h = sphere_refine(D, start);
    if (hp_membership(D, h, spec.membership_tol)) accepted.push_back(h);
  };
  for (int s = 0; s < spec.budget; ++s) consider(rng.unit_vector(D.n()));

  // accepted points spawn nearby starts; resolves multi-branch sets
  std::size_t first_wave = accepted.size();
  for (std::size_t i = 0; i < first_wave; ++i) {
    for (int s = 0; s < spec.refine_spawn; ++s) {
      Vec perturbed = (accepted[i] + 0.05 * rng.unit_vector(D.n())).normalized();
      consider(perturbed);
    }
  }

  // deterministic order, then greedy angular dedup
  std::sort(accepted.begin(), accepted.end(), [](const Vec& a, const Vec& b) {
    for (int i = 0; i < a.size(); ++i)
      if (a[i] != b[i]) return a[i] < b[i];
    return false;
  });
  std::vector<Vec> kept;
  for (const auto& h : accepted) {
    bool dup = false;
    for (const auto& k : kept)
      if (angle_between(h, k) <= spec.dedup_angle) {
        dup = true;
        break;
      }
    if (!dup) kept.push_back(h);
  }
  return kept;
}

StrongRegularityEstimate strong_regularity_estimate(const Decomposition& D, double alpha,
                                                    int budget, std::uint64_t seed) {
  if (alpha <= 0.0 || budget < 1)
    throw std::invalid_argument("strong_regularity_estimate: need alpha > 0 and budget >= 1");

  if (D.p() == 1) {
    // Psi_1 does not depend on h; the sup is its right-inverse norm
    double rinv = linalg::right_inverse_norm(D.band_operator(1, D.base_point(), Vec::Zero(D.n())),
                                             D.config().rank_tol);
    auto outcome = linalg::is_bounded(rinv) ? StrongRegularityEstimate::Outcome::Finite
                                            : StrongRegularityEstimate::Outcome::Unbounded;
    return {outcome, rinv, budget, budget};
  }

  Rng rng(seed);
  StrongRegularityEstimate est{StrongRegularityEstimate::Outcome::EmptyBand, 0.0, 0, budget};
  for (int s = 0; s < budget; ++s) {
    Vec h = rng.unit_vector(D.n());
    bool in_band = true;
    for (int k = 1; k <= D.p() && in_band; ++k)
      in_band = D.band_form(k, D.base_point(), h).norm() <= alpha;
    if (!in_band) continue;
    est.accepted += 1;
    double rinv = linalg::right_inverse_norm(factor_operator(D, h).psi, D.config().rank_tol);
    if (!linalg::is_bounded(rinv)) {
      est.outcome = StrongRegularityEstimate::Outcome::Unbounded;
      est.sup_inverse_norm = rinv;
      return est;
    }
    est.sup_inverse_norm = std::max(est.sup_inverse_norm, rinv);
    est.outcome = StrongRegularityEstimate::Outcome::Finite;
  }
  return est;
}

NewtonChain::NewtonChain(Vec h, int p, std::vector<Mat> pbar, std::vector<Mat> combined,
                         Mat factor_matrix)
    : h_(std::move(h)), p_(p), pbar_(std::move(pbar)), combined_(std::move(combined)),
      factor_(std::move(factor_matrix)) {}

Mat NewtonChain::iteration_matrix(const mapping::MappingModel& M, const Vec& x) const {
  Mat a = M.jacobian(x);
  for (int j = 1; j <= p_ - 1; ++j) a += combined_[j - 1] * M.contract_to_matrix(j + 1, x, h_);
  return a;
}

Vec NewtonChain::modified_residual(const mapping::MappingModel& M, const Vec& x) const {
  Vec r = M.evaluate(x);
  for (int j = 1; j <= p_ - 1; ++j) r += combined_[j - 1] * M.contract_to_vector(j, x, h_);
  return r;
}

namespace {

// Pbar_{i_last} ... Pbar_{i_first} over the set bits of mask, larger band
// index applied on the left.
Mat ordered_product(const std::vector<Mat>& pbar, unsigned mask, int dim) {
  Mat prod = Mat::Identity(dim, dim);
  for (int i = static_cast<int>(pbar.size()) - 1; i >= 0; --i)
    if (mask & (1u << i)) prod = prod * pbar[i];
  return prod;
}

}  // namespace

NewtonChain assemble_newton_chain(const mapping::MappingModel& M, const Vec& xstar, const Vec& h,
                                  int p, double rank_tol) {
  if (p < 2) throw std::invalid_argument("newton chain: p must be >= 2");
  if (p > M.max_order())
    throw std::invalid_argument("newton chain: p exceeds the model's max order");
  if (h.size() != M.n() || xstar.size() != M.n())
    throw std::invalid_argument("newton chain: dimension mismatch");
  if (h.norm() == 0.0) throw std::invalid_argument("newton chain: h must be nonzero");

  const int m = M.m();
  const Mat jac = M.jacobian(xstar);

  // nested images Y_k and their complement projectors
  std::vector<Mat> pbar;
  for (int k = 1; k <= p - 1; ++k) {
    Mat img = jac;
    for (unsigned mask = 1; mask < (1u << (k - 1)); ++mask) {
      int j = std::popcount(mask);
      img += ordered_product(pbar, mask, m) * M.contract_to_matrix(j + 1, xstar, h);
    }
    linalg::Subspace y = linalg::column_space(img, rank_tol);
    pbar.push_back(linalg::orthoprojector(y, /*onto_complement=*/true).matrix);
  }

  // combined projectors P_j = sum over decreasing j-tuples of Pbar products
  std::vector<Mat> combined(p - 1, Mat::Zero(m, m));
  for (unsigned mask = 1; mask < (1u << (p - 1)); ++mask) {
    int j = std::popcount(mask);
    combined[j - 1] += ordered_product(pbar, mask, m);
  }

  Mat factor = jac;
  for (int j = 1; j <= p - 1; ++j)
    factor += combined[j - 1] * M.contract_to_matrix(j + 1, xstar, h);

  return NewtonChain(h, p, std::move(pbar), std::move(combined), std::move(factor));
}

NewtonChain build_newton_chain(const mapping::MappingModel& M, const Vec& xstar, const Vec& h,
                               int p, double rank_tol) {
  NewtonChain chain = assemble_newton_chain(M, xstar, h, p, rank_tol);
  int r = linalg::rank(chain.factor_matrix(), rank_tol);
  if (r < M.m()) throw SingularFactorMatrix(r, M.m());
  return chain;
}

}  // namespace preg::pfactor
