#include "xsep/numerics.hpp"

#include <Eigen/SVD>
#include <limits>

namespace xsep {
namespace numerics {

namespace {
void require_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw ArgumentError(std::string("non-finite entries in ") + what);
}
}  // namespace

ThinSVD thin_svd(const Eigen::MatrixXd& m) {
  require_finite(m, "matrix");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  double tol = 0.0;
  if (sv.size() > 0)
    tol = static_cast<double>(std::max(m.rows(), m.cols())) *
          std::numeric_limits<double>::epsilon() * sv(0);
  Eigen::Index r = 0;
  while (r < sv.size() && sv(r) > tol) ++r;
  ThinSVD out;
  out.G = svd.matrixU().leftCols(r);
  out.sigma = sv.head(r);
  out.U = svd.matrixV().leftCols(r);
  return out;
}

Eigen::VectorXd least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  require_finite(a, "A");
  require_finite(b, "b");
  if (a.rows() != b.size()) throw ArgumentError("least_squares: shape mismatch");
  ThinSVD s = thin_svd(a);
  if (s.rank() == 0) return Eigen::VectorXd::Zero(a.cols());
  return s.U * (s.sigma.cwiseInverse().asDiagonal() * (s.G.transpose() * b));
}

Eigen::MatrixXd min_norm_right_solve(const Eigen::MatrixXd& b, const Eigen::MatrixXd& c) {
  require_finite(b, "B");
  require_finite(c, "C");
  if (b.cols() != c.cols()) throw ArgumentError("min_norm_right_solve: shape mismatch");
  if (c.isZero(0.0)) throw NumericalError("empty code matrix");
  ThinSVD s = thin_svd(c);
  if (s.rank() == 0) throw NumericalError("empty code matrix");
  return ((b * s.U) * s.sigma.cwiseInverse().asDiagonal()) * s.G.transpose();
}

}  // namespace numerics
}  // namespace xsep
