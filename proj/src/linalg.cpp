#include "preg/linalg.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace preg::linalg {

namespace {

double effective_tol(const Eigen::JacobiSVD<Mat>& svd, Eigen::Index rows, Eigen::Index cols,
                     double tol) {
  if (tol >= 0.0) return tol;
  double smax = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
  return static_cast<double>(std::max(rows, cols)) *
         std::numeric_limits<double>::epsilon() * smax;
}

int rank_from_svd(const Eigen::JacobiSVD<Mat>& svd, Eigen::Index rows, Eigen::Index cols,
                  double tol) {
  double cut = effective_tol(svd, rows, cols, tol);
  int r = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > cut) ++r;
  return r;
}

}  // namespace

Subspace::Subspace(int ambient, Mat orthonormal_basis)
    : ambient_(ambient), basis_(std::move(orthonormal_basis)) {
  if (basis_.rows() != ambient_)
    throw std::invalid_argument("Subspace: basis row count != ambient dimension");
  if (basis_.cols() > ambient_)
    throw std::invalid_argument("Subspace: dim exceeds ambient dimension");
  if (basis_.cols() > 0) {
    Mat gram = basis_.transpose() * basis_;
    if ((gram - Mat::Identity(basis_.cols(), basis_.cols())).cwiseAbs().maxCoeff() > 1e-10)
      throw std::invalid_argument("Subspace: basis is not orthonormal");
  }
}

bool Subspace::contains(const Vec& v, double tol) const {
  if (v.size() != ambient_) throw std::invalid_argument("Subspace::contains: dimension");
  Vec resid = v - basis_ * (basis_.transpose() * v);
  return resid.norm() <= tol * std::max(1.0, v.norm());
}

Subspace Subspace::orthogonal_complement() const {
  if (dim() == 0) return Subspace::full(ambient_);
  if (dim() == ambient_) return Subspace::zero(ambient_);
  Eigen::HouseholderQR<Mat> qr(basis_);
  Mat q = qr.householderQ();
  return Subspace(ambient_, q.rightCols(ambient_ - dim()));
}

namespace {

// SVD factors come back normalized only to machine precision; rescaling the
// columns pins axis-aligned directions to exact unit entries.
Mat renormalized(Mat basis) {
  for (Eigen::Index c = 0; c < basis.cols(); ++c) basis.col(c) /= basis.col(c).norm();
  return basis;
}

}  // namespace

Subspace column_space(const Mat& A, double tol) {
  if (A.rows() == 0) return Subspace::zero(0);
  if (A.cols() == 0) return Subspace::zero(static_cast<int>(A.rows()));
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinU);
  int r = rank_from_svd(svd, A.rows(), A.cols(), tol);
  return Subspace(static_cast<int>(A.rows()), renormalized(svd.matrixU().leftCols(r)));
}

Subspace null_space(const Mat& A, double tol) {
  if (A.cols() == 0) return Subspace::zero(0);
  if (A.rows() == 0) return Subspace::full(static_cast<int>(A.cols()));
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullV);
  int r = rank_from_svd(svd, A.rows(), A.cols(), tol);
  return Subspace(static_cast<int>(A.cols()),
                  renormalized(svd.matrixV().rightCols(A.cols() - r)));
}

int rank(const Mat& A, double tol) {
  if (A.rows() == 0 || A.cols() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(A);
  return rank_from_svd(svd, A.rows(), A.cols(), tol);
}

Projector orthoprojector(const Subspace& S, bool onto_complement) {
  int a = S.ambient();
  Mat p = S.basis() * S.basis().transpose();
  if (onto_complement) p = Mat::Identity(a, a) - p;
  p = 0.5 * (p + p.transpose());  // enforce exact symmetry
  if (onto_complement) return {std::move(p), S.orthogonal_complement()};
  return {std::move(p), S};
}

double right_inverse_norm(const Mat& A, double tol) {
  const int m = static_cast<int>(A.rows());
  if (m == 0) return 0.0;  // trivially surjective onto R^0
  if (A.cols() < A.rows()) return std::numeric_limits<double>::infinity();
  Eigen::JacobiSVD<Mat> svd(A);
  if (rank_from_svd(svd, A.rows(), A.cols(), tol) < m)
    return std::numeric_limits<double>::infinity();
  return 1.0 / svd.singularValues()[m - 1];
}

LeastSquaresSolution least_squares(const Mat& A, const Vec& b, double tol) {
  if (A.rows() != b.size()) throw std::invalid_argument("least_squares: dimension mismatch");
  if (A.cols() == 0) return {Vec::Zero(0), b.norm()};
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  double cut = effective_tol(svd, A.rows(), A.cols(), tol);
  // pseudoinverse solve; small singular values treated as zero gives the
  // minimal-norm minimizer
  const auto& sv = svd.singularValues();
  Vec coeff = svd.matrixU().transpose() * b;
  for (Eigen::Index i = 0; i < sv.size(); ++i) coeff[i] = sv[i] > cut ? coeff[i] / sv[i] : 0.0;
  Vec x = svd.matrixV() * coeff;
  return {x, (A * x - b).norm()};
}

std::vector<double> principal_angles(const Subspace& a, const Subspace& b) {
  if (a.ambient() != b.ambient())
    throw std::invalid_argument("principal_angles: ambient dimensions differ");
  int d = std::min(a.dim(), b.dim());
  if (d == 0) return {};
  Eigen::JacobiSVD<Mat> svd(a.basis().transpose() * b.basis());
  std::vector<double> angles;
  angles.reserve(d);
  for (int i = 0; i < d; ++i) {
    double c = std::clamp(svd.singularValues()[i], -1.0, 1.0);
    angles.push_back(std::acos(c));
  }
  std::sort(angles.begin(), angles.end());
  return angles;
}

}  // namespace preg::linalg
