#pragma once

#include <Eigen/Core>

#include "xsep/coupled_dl.hpp"

namespace xsep {
namespace sep {

struct BPConfig {
  double rho = 1.0;        // ADMM penalty
  double feas_tol = 1e-6;  // relative to ||b||
  double dual_tol = 1e-6;
  int max_iters = 5000;
};

struct SeparationSolution {
  Eigen::VectorXd z1c;
  Eigen::VectorXd z2c;
  Eigen::VectorXd v;
  double objective = 0.0;            // ||z1c||_1 + ||z2c||_1 + 2 ||v||_1
  double constraint_residual = 0.0;  // ||A w - b||_2
  bool converged = true;
  bool projected = false;  // b was replaced by its projection onto range(A)
};

// Per-patch solver for
//   min ||z1c||_1 + ||z2c||_1 + 2||v||_1
//   s.t. m  = phi_c z1c + phi_c z2c + 2 phi v
//        y1 = psi_c z1c
//        y2 = psi_c z2c
// The weighted l1 is reduced to plain basis pursuit by column scaling; the
// affine projection uses one thin SVD of the constraint matrix, shared across
// every patch separated with the same dictionaries.
class SeparationOperator {
 public:
  SeparationOperator(const dl::DictionaryTriple& dict, const BPConfig& cfg);

  // Throws NumericalError when b = [m; y1; y2] is not in range(A) within
  // feas_tol * ||b||.
  SeparationSolution solve(const Eigen::VectorXd& m, const Eigen::VectorXd& y1,
                           const Eigen::VectorXd& y2) const;

  // Pipeline fallback: infeasible b is first projected onto range(A)
  // (solution flagged `projected`), then solved.
  SeparationSolution solve_with_projection(const Eigen::VectorXd& m,
                                           const Eigen::VectorXd& y1,
                                           const Eigen::VectorXd& y2) const;

  // Minimum-norm least-squares codes, the last-resort patch fallback.
  SeparationSolution solve_least_squares(const Eigen::VectorXd& m,
                                         const Eigen::VectorXd& y1,
                                         const Eigen::VectorXd& y2) const;

  Eigen::Index n() const { return n_; }

 private:
  SeparationSolution run(Eigen::VectorXd b, bool allow_projection) const;

  Eigen::Index n_, gamma_, d_;
  BPConfig cfg_;
  Eigen::MatrixXd a_scaled_;  // 3n x (2 gamma + d), columns divided by weights
  // thin SVD of a_scaled_ for range projection and pseudo-inverse
  Eigen::MatrixXd range_basis_;   // G, 3n x r
  Eigen::MatrixXd pinv_right_;    // U * sigma^-1, (2 gamma + d) x r
};

struct SeparationProblem {
  Eigen::VectorXd m, y1, y2;  // DC-removed patches
  const dl::DictionaryTriple* dict = nullptr;
};

SeparationSolution solve_separation(const SeparationProblem& p, const BPConfig& cfg);

// include_v on: x_i = phi_c z_ic + phi v; off: x_i = phi_c z_ic.
std::pair<Eigen::VectorXd, Eigen::VectorXd> reconstruct_patches(
    const SeparationSolution& sol, const dl::DictionaryTriple& dict, bool include_v);

}  // namespace sep
}  // namespace xsep
