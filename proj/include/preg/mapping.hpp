#pragma once

#include <memory>

#include "preg/expr.hpp"
#include "preg/linalg.hpp"
#include "preg/types.hpp"

namespace preg::mapping {

// A polynomial mapping F : R^n -> R^m bundled with its exact derivative
// tensors. Tensors are built lazily per order and cached; the cache is
// internally synchronized, so a MappingModel behaves as an immutable value
// and copies share the cache.
class MappingModel {
 public:
  explicit MappingModel(expr::PolySystem sys, int max_order = expr::kDefaultMaxDerivativeOrder);

  int n() const;
  int m() const;
  int max_order() const;
  const expr::PolySystem& system() const;

  Vec evaluate(const Vec& x) const;
  Mat jacobian(const Vec& x) const;

  // Cached order-k symbolic tensor; throws if k exceeds max_order.
  const expr::DerivTensor& derivative(int order) const;

  // F^(k)(x) as dense symmetric values.
  expr::SymTensor derivative_at(int order, const Vec& x) const;
  // F^(k)(x)[h]^j with k-j free slots.
  expr::SymTensor contract(int order, const Vec& x, const Vec& h, int copies) const;
  // F^(k)(x)[h]^{k-1}, an m x n matrix.
  Mat contract_to_matrix(int order, const Vec& x, const Vec& h) const;
  // F^(k)(x)[h]^k in R^m.
  Vec contract_to_vector(int order, const Vec& x, const Vec& h) const;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

struct SingularityInfo {
  bool singular;
  int rank;
  linalg::Subspace image;
};

// Rank decision on the Jacobian at x: singular iff rank < m.
SingularityInfo is_singular_at(const MappingModel& M, const Vec& x,
                               double tol = linalg::kAutoTol);

}  // namespace preg::mapping
