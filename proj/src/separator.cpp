#include "xsep/separator.hpp"

#include <cmath>
#include <iostream>

#include "xsep/numerics.hpp"

namespace xsep {
namespace sep {

SeparationOperator::SeparationOperator(const dl::DictionaryTriple& dict, const BPConfig& cfg)
    : n_(dict.n()), gamma_(dict.gamma()), d_(dict.d()), cfg_(cfg) {
  if (cfg.rho <= 0 || cfg.feas_tol <= 0 || cfg.dual_tol <= 0 || cfg.max_iters < 1)
    throw ArgumentError("BPConfig entries must be positive");

  const Eigen::Index rows = 3 * n_, cols = 2 * gamma_ + d_;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, cols);
  a.block(0, 0, n_, gamma_) = dict.phi_c;
  a.block(0, gamma_, n_, gamma_) = dict.phi_c;
  a.block(0, 2 * gamma_, n_, d_) = 2.0 * dict.phi;
  a.block(n_, 0, n_, gamma_) = dict.psi_c;
  a.block(2 * n_, gamma_, n_, gamma_) = dict.psi_c;

  // weight u_j = 2 on the v block; scaling columns by 1/u_j turns the
  // weighted l1 objective into a plain one
  a_scaled_ = a;
  a_scaled_.rightCols(d_) *= 0.5;

  numerics::ThinSVD svd = numerics::thin_svd(a_scaled_);
  range_basis_ = svd.G;
  pinv_right_ = svd.U * svd.sigma.cwiseInverse().asDiagonal();
}

SeparationSolution SeparationOperator::run(Eigen::VectorXd b, bool allow_projection) const {
  SeparationSolution sol;
  const double b_norm = b.norm();
  const Eigen::Index cols = a_scaled_.cols();
  if (b_norm == 0.0) {
    sol.z1c = Eigen::VectorXd::Zero(gamma_);
    sol.z2c = Eigen::VectorXd::Zero(gamma_);
    sol.v = Eigen::VectorXd::Zero(d_);
    return sol;
  }

  Eigen::VectorXd in_range = range_basis_ * (range_basis_.transpose() * b);
  double infeas = (b - in_range).norm();
  if (infeas > cfg_.feas_tol * b_norm) {
    if (!allow_projection)
      throw NumericalError("infeasible separation constraints, least-squares residual " +
                           std::to_string(infeas));
    b = in_range;
    sol.projected = true;
  }

  auto pinv_apply = [&](const Eigen::VectorXd& r) -> Eigen::VectorXd {
    return pinv_right_ * (range_basis_.transpose() * r);
  };
  auto project = [&](const Eigen::VectorXd& w) -> Eigen::VectorXd {
    return w - pinv_apply(a_scaled_ * w - b);
  };

  const double shrink = 1.0 / cfg_.rho;
  Eigen::VectorXd x = pinv_apply(b);  // min-norm feasible start
  Eigen::VectorXd z = x;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(cols);

  const double eps_pri = cfg_.feas_tol * b_norm;
  const double eps_dual = cfg_.dual_tol * b_norm;
  sol.converged = false;
  for (int iter = 0; iter < cfg_.max_iters; ++iter) {
    x = project(z - u);
    Eigen::VectorXd z_prev = z;
    z = (x + u).unaryExpr([shrink](double t) {
      return t > shrink ? t - shrink : (t < -shrink ? t + shrink : 0.0);
    });
    u += x - z;
    double primal = (x - z).norm();
    double dual = cfg_.rho * (z - z_prev).norm();
    if (primal <= eps_pri && dual <= eps_dual) {
      sol.converged = true;
      break;
    }
  }
  // x is feasible by construction; unscale the v block back.
  sol.z1c = x.segment(0, gamma_);
  sol.z2c = x.segment(gamma_, gamma_);
  sol.v = 0.5 * x.tail(d_);
  sol.objective = sol.z1c.lpNorm<1>() + sol.z2c.lpNorm<1>() + 2.0 * sol.v.lpNorm<1>();
  sol.constraint_residual = (a_scaled_ * x - b).norm();
  return sol;
}

SeparationSolution SeparationOperator::solve(const Eigen::VectorXd& m,
                                             const Eigen::VectorXd& y1,
                                             const Eigen::VectorXd& y2) const {
  if (m.size() != n_ || y1.size() != n_ || y2.size() != n_)
    throw ArgumentError("separation: patch size mismatch");
  Eigen::VectorXd b(3 * n_);
  b << m, y1, y2;
  if (!b.allFinite()) throw ArgumentError("separation: non-finite input");
  return run(std::move(b), false);
}

SeparationSolution SeparationOperator::solve_with_projection(const Eigen::VectorXd& m,
                                                             const Eigen::VectorXd& y1,
                                                             const Eigen::VectorXd& y2) const {
  if (m.size() != n_ || y1.size() != n_ || y2.size() != n_)
    throw ArgumentError("separation: patch size mismatch");
  Eigen::VectorXd b(3 * n_);
  b << m, y1, y2;
  if (!b.allFinite()) throw ArgumentError("separation: non-finite input");
  return run(std::move(b), true);
}

SeparationSolution SeparationOperator::solve_least_squares(const Eigen::VectorXd& m,
                                                           const Eigen::VectorXd& y1,
                                                           const Eigen::VectorXd& y2) const {
  Eigen::VectorXd b(3 * n_);
  b << m, y1, y2;
  Eigen::VectorXd x = pinv_right_ * (range_basis_.transpose() * b);
  SeparationSolution sol;
  sol.z1c = x.segment(0, gamma_);
  sol.z2c = x.segment(gamma_, gamma_);
  sol.v = 0.5 * x.tail(d_);
  sol.objective = sol.z1c.lpNorm<1>() + sol.z2c.lpNorm<1>() + 2.0 * sol.v.lpNorm<1>();
  sol.constraint_residual = (a_scaled_ * x - b).norm();
  sol.projected = true;
  return sol;
}

SeparationSolution solve_separation(const SeparationProblem& p, const BPConfig& cfg) {
  if (!p.dict) throw ArgumentError("solve_separation: missing dictionary");
  SeparationOperator op(*p.dict, cfg);
  SeparationSolution sol = op.solve(p.m, p.y1, p.y2);
  if (!sol.converged)
    std::cerr << "warn=separation_not_converged max_iters=" << cfg.max_iters << "\n";
  return sol;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> reconstruct_patches(
    const SeparationSolution& sol, const dl::DictionaryTriple& dict, bool include_v) {
  Eigen::VectorXd x1 = dict.phi_c * sol.z1c;
  Eigen::VectorXd x2 = dict.phi_c * sol.z2c;
  if (include_v) {
    Eigen::VectorXd xv = dict.phi * sol.v;
    x1 += xv;
    x2 += xv;
  }
  return {x1, x2};
}

}  // namespace sep
}  // namespace xsep
