#include "xsep/momp.hpp"

#include <cmath>

#include "xsep/numerics.hpp"

namespace xsep {
namespace momp {

SparseCode run(const Eigen::VectorXd& b, const GroupedDictionary& dict,
               const SparsityBudget& budget) {
  const Eigen::Index cols = dict.theta.cols();
  const Eigen::Index gamma = dict.n_common;
  if (gamma < 0 || gamma > cols) throw ArgumentError("momp: invalid group split");
  if (dict.theta.rows() != b.size()) throw ArgumentError("momp: dimension mismatch");
  if (budget.s_z < 0 || budget.s_v < 0) throw ArgumentError("momp: negative budget");
  if (budget.s_z > gamma || budget.s_v > cols - gamma)
    throw ArgumentError("momp: budget exceeds group size");
  if (!b.allFinite()) throw ArgumentError("momp: non-finite signal");

  SparseCode out;
  out.z = Eigen::VectorXd::Zero(gamma);
  out.v = Eigen::VectorXd::Zero(cols - gamma);

  const double b_norm = b.norm();
  const double exit_tol = 1e-12 * b_norm;
  if (b_norm == 0.0) return out;

  Eigen::VectorXd residual = b;
  Eigen::VectorXd coeffs;
  std::vector<bool> selected(static_cast<size_t>(cols), false);
  int used_z = 0, used_v = 0;
  const int total = budget.s_z + budget.s_v;

  Eigen::MatrixXd chosen(dict.theta.rows(), total);

  for (int iter = 0; iter < total; ++iter) {
    if (residual.norm() < exit_tol) break;

    Eigen::VectorXd corr = dict.theta.transpose() * residual;

    // Best admissible column by |correlation|; equal scores favor the lower
    // index, masked-out (all-zero) columns are never admissible.
    Eigen::Index best = -1;
    double best_score = -1.0;
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (selected[static_cast<size_t>(j)]) continue;
      bool common = j < gamma;
      if (common ? used_z >= budget.s_z : used_v >= budget.s_v) continue;
      if (dict.theta.col(j).isZero(0.0)) continue;
      double score = std::abs(corr(j));
      if (score > best_score) {
        best_score = score;
        best = j;
      }
    }
    if (best < 0) break;  // both groups exhausted or only dead columns left

    selected[static_cast<size_t>(best)] = true;
    if (best < gamma) ++used_z; else ++used_v;
    out.support.push_back(best);

    Eigen::Index k = static_cast<Eigen::Index>(out.support.size());
    chosen.col(k - 1) = dict.theta.col(best);
    coeffs = numerics::least_squares(chosen.leftCols(k), b);
    residual = b - chosen.leftCols(k) * coeffs;
  }

  for (size_t i = 0; i < out.support.size(); ++i) {
    Eigen::Index j = out.support[i];
    if (j < gamma)
      out.z(j) = coeffs(static_cast<Eigen::Index>(i));
    else
      out.v(j - gamma) = coeffs(static_cast<Eigen::Index>(i));
  }
  return out;
}

}  // namespace momp
}  // namespace xsep
