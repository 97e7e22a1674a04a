#pragma once

#include "cinnrl/error.hpp"

#include <Eigen/Dense>

#include <sstream>

namespace cinnrl::num {

/// Pivot magnitude below which a least-squares system is rank deficient.
inline constexpr double kRankThreshold = 1e-10;

/// First `rows` rows of the product of Householder reflections whose vectors
/// are the rows of `reflectors` (k x m). With k = 0 the result is the leading
/// rows of the identity. Throws RankError on a zero-norm reflector.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
householder_rows(const Eigen::MatrixBase<Derived>& reflectors, Eigen::Index rows) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index m = reflectors.cols();
  if (rows > m) {
    std::ostringstream msg;
    msg << "householder_rows: requested " << rows << " rows of an order-" << m << " product";
    throw ShapeError(msg.str());
  }
  Mat w = Mat::Identity(rows, m);
  for (Eigen::Index i = 0; i < reflectors.rows(); ++i) {
    const auto v = reflectors.row(i).transpose();
    const Scalar norm2 = v.squaredNorm();
    if (!(norm2 > Scalar(0))) {
      throw RankError("householder_rows: reflector " + std::to_string(i) + " has zero norm");
    }
    // W <- W (I - 2 v v^T / |v|^2)
    w.noalias() -= (Scalar(2) / norm2) * (w * v) * v.transpose();
  }
  return w;
}

/// Least-squares solution of A X = B via column-pivoted QR. Requires
/// rows(A) >= cols(A) and every pivot above kRankThreshold.
template <typename DerivedA, typename DerivedB>
Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic>
lstsq(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (a.rows() < a.cols()) {
    throw ShapeError("lstsq: system is underdetermined (" + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + ")");
  }
  if (b.rows() != a.rows()) {
    throw ShapeError("lstsq: right-hand side has " + std::to_string(b.rows()) +
                     " rows, expected " + std::to_string(a.rows()));
  }
  Eigen::ColPivHouseholderQR<Mat> qr(a);
  if (a.cols() > 0) {
    const Scalar smallest = qr.matrixR().diagonal().cwiseAbs().minCoeff();
    if (!(smallest > Scalar(kRankThreshold))) {
      std::ostringstream msg;
      msg << "lstsq: matrix is rank deficient (smallest pivot " << smallest << ")";
      throw RankError(msg.str());
    }
  }
  return qr.solve(b);
}

/// max |W W^T - I|
template <typename Derived>
typename Derived::Scalar orthogonality_defect(const Eigen::MatrixBase<Derived>& w) {
  using Mat = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (w.rows() == 0) return typename Derived::Scalar(0);
  const Mat gram = w * w.transpose();
  return (gram - Mat::Identity(w.rows(), w.rows())).cwiseAbs().maxCoeff();
}

}  // namespace cinnrl::num
