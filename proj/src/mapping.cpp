#include "preg/mapping.hpp"

#include <mutex>
#include <optional>
#include <stdexcept>
#include <vector>

namespace preg::mapping {

struct MappingModel::Impl {
  expr::PolySystem sys;
  int max_order;
  mutable std::mutex mu;
  mutable std::vector<std::optional<expr::DerivTensor>> tensors;  // index = order-1

  Impl(expr::PolySystem s, int p) : sys(std::move(s)), max_order(p), tensors(p) {}
};

MappingModel::MappingModel(expr::PolySystem sys, int max_order)
    : impl_(std::make_shared<Impl>(std::move(sys), max_order)) {
  if (max_order < 1) throw std::invalid_argument("MappingModel: max_order must be >= 1");
}

int MappingModel::n() const { return impl_->sys.n(); }
int MappingModel::m() const { return impl_->sys.m(); }
int MappingModel::max_order() const { return impl_->max_order; }
const expr::PolySystem& MappingModel::system() const { return impl_->sys; }

Vec MappingModel::evaluate(const Vec& x) const { return impl_->sys.eval(x); }

const expr::DerivTensor& MappingModel::derivative(int order) const {
  if (order < 1 || order > impl_->max_order)
    throw std::invalid_argument("MappingModel::derivative: order " + std::to_string(order) +
                                " outside [1, " + std::to_string(impl_->max_order) + "]");
  std::lock_guard<std::mutex> lock(impl_->mu);
  auto& slot = impl_->tensors[order - 1];
  if (!slot) slot.emplace(impl_->sys, order);
  return *slot;
}

Mat MappingModel::jacobian(const Vec& x) const {
  if (x.size() != n()) throw std::invalid_argument("jacobian: dimension mismatch");
  return derivative(1).eval(x).as_matrix();
}

expr::SymTensor MappingModel::derivative_at(int order, const Vec& x) const {
  if (x.size() != n()) throw std::invalid_argument("derivative_at: dimension mismatch");
  return derivative(order).eval(x);
}

expr::SymTensor MappingModel::contract(int order, const Vec& x, const Vec& h, int copies) const {
  if (x.size() != n() || h.size() != n())
    throw std::invalid_argument("contract: dimension mismatch");
  return derivative(order).eval(x).contract(h, copies);
}

Mat MappingModel::contract_to_matrix(int order, const Vec& x, const Vec& h) const {
  if (order == 1) return jacobian(x);
  return contract(order, x, h, order - 1).as_matrix();
}

Vec MappingModel::contract_to_vector(int order, const Vec& x, const Vec& h) const {
  return contract(order, x, h, order).as_vector();
}

SingularityInfo is_singular_at(const MappingModel& M, const Vec& x, double tol) {
  Mat j = M.jacobian(x);
  linalg::Subspace image = linalg::column_space(j, tol);
  return {image.dim() < M.m(), image.dim(), std::move(image)};
}

}  // namespace preg::mapping
