#pragma once

#include <doctest.h>

#include <cmath>

#include "preg/mapping.hpp"
#include "preg/types.hpp"

namespace preg::testutil {

inline Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

inline Mat mat(std::initializer_list<std::initializer_list<double>> rows) {
  Mat out(static_cast<Eigen::Index>(rows.size()),
          static_cast<Eigen::Index>(rows.begin()->size()));
  int i = 0;
  for (const auto& row : rows) {
    int j = 0;
    for (double x : row) out(i, j++) = x;
    ++i;
  }
  return out;
}

inline void check_close(const Mat& a, const Mat& b, double tol) {
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  CHECK((a - b).cwiseAbs().maxCoeff() <= tol);
}

inline void check_close(const Vec& a, const Vec& b, double tol) {
  REQUIRE(a.size() == b.size());
  CHECK((a - b).cwiseAbs().maxCoeff() <= tol);
}

// Central-difference Jacobian: the independent oracle for first derivatives.
inline Mat fd_jacobian(const mapping::MappingModel& M, const Vec& x, double step = 1e-5) {
  Mat j(M.m(), M.n());
  for (int c = 0; c < M.n(); ++c) {
    Vec e = Vec::Zero(M.n());
    e[c] = step;
    j.col(c) = (M.evaluate(x + e) - M.evaluate(x - e)) / (2 * step);
  }
  return j;
}

// Central differences of the exact Jacobian: oracle for second derivatives.
inline Mat fd_hessian_column(const mapping::MappingModel& M, const Vec& x, int comp,
                             double step = 1e-5) {
  Mat h(M.n(), M.n());
  for (int c = 0; c < M.n(); ++c) {
    Vec e = Vec::Zero(M.n());
    e[c] = step;
    h.col(c) = (M.jacobian(x + e).row(comp) - M.jacobian(x - e).row(comp)).transpose() /
               (2 * step);
  }
  return h;
}

// Principal-angle distance between two spans, 0 when equal.
inline double span_gap(const Mat& basis_a, const Mat& basis_b) {
  Mat pa = basis_a * basis_a.transpose();
  Mat pb = basis_b * basis_b.transpose();
  return (pa - pb).cwiseAbs().maxCoeff();
}

}  // namespace preg::testutil
