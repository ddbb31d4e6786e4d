#pragma once

#include <limits>
#include <vector>

#include "preg/types.hpp"

namespace preg::linalg {

// Negative tolerance arguments mean "use the default":
// max(rows,cols) * machine epsilon * largest singular value.
inline constexpr double kAutoTol = -1.0;

// A linear subspace of R^ambient carried by an orthonormal basis
// (ambient x dim). Immutable after construction.
class Subspace {
 public:
  Subspace(int ambient, Mat orthonormal_basis);

  static Subspace zero(int ambient) { return Subspace(ambient, Mat::Zero(ambient, 0)); }
  static Subspace full(int ambient) { return Subspace(ambient, Mat::Identity(ambient, ambient)); }

  int ambient() const { return ambient_; }
  int dim() const { return static_cast<int>(basis_.cols()); }
  const Mat& basis() const { return basis_; }

  bool contains(const Vec& v, double tol = 1e-10) const;
  Subspace orthogonal_complement() const;

 private:
  int ambient_;
  Mat basis_;
};

// Orthogonal projector P = B B^T (or I - B B^T) onto the target subspace.
struct Projector {
  Mat matrix;
  Subspace target;

  Vec apply(const Vec& v) const { return matrix * v; }
};

// Span of the columns of A with singular values above tol.
Subspace column_space(const Mat& A, double tol = kAutoTol);

// Kernel of A (right null space), including the rank-deficiency directions.
Subspace null_space(const Mat& A, double tol = kAutoTol);

// Numerical rank under the SVD cutoff.
int rank(const Mat& A, double tol = kAutoTol);

Projector orthoprojector(const Subspace& S, bool onto_complement = false);

// sup over unit y of the minimal-norm preimage: 1/sigma_min for a
// surjective matrix, +infinity when rank(A) < rows(A).
double right_inverse_norm(const Mat& A, double tol = kAutoTol);

inline bool is_bounded(double rinv) { return rinv != std::numeric_limits<double>::infinity(); }

struct LeastSquaresSolution {
  Vec x;              // minimal-norm minimizer of ||Ax - b||
  double residual;    // ||Ax - b||
};

LeastSquaresSolution least_squares(const Mat& A, const Vec& b, double tol = kAutoTol);

// Angles between two subspaces of equal ambient dimension, ascending,
// min(dim1,dim2) of them.
std::vector<double> principal_angles(const Subspace& a, const Subspace& b);

}  // namespace preg::linalg
