#pragma once

#include <Eigen/Core>

#include "xsep/errors.hpp"

namespace xsep {
namespace numerics {

// Rank-truncated SVD M = G * diag(sigma) * U^T. Singular values are sorted
// descending and everything at or below max(p,q)*eps*sigma_max is dropped.
struct ThinSVD {
  Eigen::MatrixXd G;      // p x r
  Eigen::VectorXd sigma;  // r, descending
  Eigen::MatrixXd U;      // q x r
  Eigen::Index rank() const { return sigma.size(); }
};

ThinSVD thin_svd(const Eigen::MatrixXd& m);

// Minimum-norm least-squares solution of min ||b - A w||_2.
Eigen::VectorXd least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);

// Minimizer D of ||B - D C||_F with minimal Frobenius norm among minimizers:
// D = B U sigma^-1 G^T from the thin SVD of C. Equals B C^T (C C^T)^-1 when
// C has full row rank.
Eigen::MatrixXd min_norm_right_solve(const Eigen::MatrixXd& b, const Eigen::MatrixXd& c);

}  // namespace numerics
}  // namespace xsep
