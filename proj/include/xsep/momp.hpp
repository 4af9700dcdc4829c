#pragma once

#include <Eigen/Core>
#include <vector>

#include "xsep/errors.hpp"

namespace xsep {
namespace momp {

// Stacked dictionary with two column groups: the first n_common columns carry
// the common code z, the remaining ones the innovation code v.
struct GroupedDictionary {
  Eigen::MatrixXd theta;   // (2n) x (gamma + d)
  Eigen::Index n_common;   // gamma

  Eigen::Index n_innovation() const { return theta.cols() - n_common; }
};

struct SparsityBudget {
  int s_z = 0;  // max nonzeros on the common group
  int s_v = 0;  // max nonzeros on the innovation group
};

struct SparseCode {
  Eigen::VectorXd z;                  // gamma
  Eigen::VectorXd v;                  // d
  std::vector<Eigen::Index> support;  // selected columns, in selection order
};

// Greedy pursuit with per-group budgets. Each iteration ranks columns by
// |<r, theta_col>| (ties broken by lower column index), takes the best one
// whose group budget is not exhausted, then refits all selected atoms by
// least squares. Exits early once ||r|| < 1e-12 ||b||.
SparseCode run(const Eigen::VectorXd& b, const GroupedDictionary& dict,
               const SparsityBudget& budget);

}  // namespace momp
}  // namespace xsep
