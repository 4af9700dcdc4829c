#include "xsep/weighted_dl.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <iostream>
#include <limits>

#include "xsep/parallel.hpp"

namespace xsep {
namespace dl {

namespace {

void check_mask(const MaskedTrainingSet& data) {
  if (data.mask.rows() != data.base.Y.rows() || data.mask.cols() != data.base.Y.cols())
    throw ArgumentError("mask shape differs from training data");
  if (((data.mask.array() != 0.0) && (data.mask.array() != 1.0)).any())
    throw ArgumentError("mask entries must be 0 or 1");
}

// Sparse view of one code column: nonzero indices and values.
struct SparseColumn {
  std::vector<Eigen::Index> idx;
  std::vector<double> val;
};

std::vector<SparseColumn> sparsify(const Eigen::MatrixXd& m) {
  std::vector<SparseColumn> cols(static_cast<size_t>(m.cols()));
  for (Eigen::Index tau = 0; tau < m.cols(); ++tau) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (m(i, tau) != 0.0) {
        cols[static_cast<size_t>(tau)].idx.push_back(i);
        cols[static_cast<size_t>(tau)].val.push_back(m(i, tau));
      }
  }
  return cols;
}

// Solves row_i * A_i = c_i for every row i of `target` (p x cols).
// data_rows(i, tau) supplies the masked data entry, mask row selects samples.
void rowwise_update(const Eigen::MatrixXd& data_rows, const Eigen::MatrixXd& mask,
                    const Eigen::MatrixXd& codes, Eigen::MatrixXd& target,
                    const TrainConfig& cfg, const char* which) {
  const Eigen::Index cols = codes.rows();
  const Eigen::Index t = codes.cols();
  const Eigen::Index p = data_rows.rows();
  target.resize(p, cols);
  std::vector<SparseColumn> sparse = sparsify(codes);

  parallel_for(p, cfg.threads, [&](std::ptrdiff_t i) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(cols, cols);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(cols);
    Eigen::Index support = 0;
    for (Eigen::Index tau = 0; tau < t; ++tau) {
      if (mask(i, tau) == 0.0) continue;
      ++support;
      const SparseColumn& sc = sparse[static_cast<size_t>(tau)];
      for (size_t r = 0; r < sc.idx.size(); ++r) {
        c(sc.idx[r]) += data_rows(i, tau) * sc.val[r];
        for (size_t q = 0; q < sc.idx.size(); ++q)
          a(sc.idx[r], sc.idx[q]) += sc.val[r] * sc.val[q];
      }
    }
    if (cfg.ridge) {
      double ridge = 1e-8 * a.trace() / static_cast<double>(cols);
      a.diagonal().array() += ridge;
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    Eigen::VectorXd dvec = ldlt.vectorD();
    double dmax = dvec.cwiseAbs().maxCoeff();
    double tol = static_cast<double>(cols) * std::numeric_limits<double>::epsilon() * dmax;
    if (ldlt.info() != Eigen::Success || dmax == 0.0 || dvec.cwiseAbs().minCoeff() <= tol)
      throw NumericalError(std::string("weighted update: singular A_i for ") + which +
                           " row " + std::to_string(i) + " (|S_i| = " + std::to_string(support) +
                           "); need at least " + std::to_string(cols) +
                           " valid samples per row, i.e. roughly n*atoms = " +
                           std::to_string(p * cols) + " training samples in total");
    target.row(i) = ldlt.solve(c).transpose();
  });
}

}  // namespace

CodeMatrices masked_sparse_code_step(const MaskedTrainingSet& data,
                                     const DictionaryTriple& dict,
                                     const momp::SparsityBudget& budget,
                                     std::vector<Eigen::Index>* flagged, int threads) {
  check_mask(data);
  if (data.n() != dict.n()) throw ArgumentError("masked_sparse_code_step: patch size mismatch");

  const Eigen::Index t = data.t(), nn = data.n();
  momp::GroupedDictionary theta = dict.stacked();
  CodeMatrices codes;
  codes.Z = Eigen::MatrixXd::Zero(dict.gamma(), t);
  codes.V = Eigen::MatrixXd::Zero(dict.d(), t);
  std::vector<uint8_t> dead(static_cast<size_t>(t), 0);

  parallel_for(t, threads, [&](std::ptrdiff_t tau) {
    Eigen::VectorXd lambda = data.mask.col(tau);
    if (lambda.isZero(0.0)) {
      dead[static_cast<size_t>(tau)] = 1;
      return;
    }
    Eigen::VectorXd lam2(2 * nn);
    lam2.head(nn) = lambda;
    lam2.tail(nn) = lambda;
    Eigen::VectorXd b(2 * nn);
    b.head(nn) = data.base.Y.col(tau).cwiseProduct(lambda);
    b.tail(nn) = data.base.X.col(tau).cwiseProduct(lambda);
    momp::GroupedDictionary masked;
    masked.n_common = theta.n_common;
    masked.theta = lam2.asDiagonal() * theta.theta;
    momp::SparseCode code = momp::run(b, masked, budget);
    codes.Z.col(tau) = code.z;
    codes.V.col(tau) = code.v;
  });

  if (flagged) {
    flagged->clear();
    for (Eigen::Index tau = 0; tau < t; ++tau)
      if (dead[static_cast<size_t>(tau)]) flagged->push_back(tau);
  }
  return codes;
}

DictionaryTriple weighted_dictionary_update(const MaskedTrainingSet& data,
                                            CodeMatrices& codes, const TrainConfig& cfg,
                                            int iter) {
  check_mask(data);
  if (codes.Z.isZero(0.0)) throw NumericalError("collapsed codes");
  Eigen::MatrixXd vbar = codes.stacked();
  if (vbar.isZero(0.0)) throw NumericalError("collapsed codes");

  DictionaryTriple dict;
  rowwise_update(data.base.Y, data.mask, codes.Z, dict.psi_c, cfg, "psi_c");
  Eigen::MatrixXd phibar;
  rowwise_update(data.base.X, data.mask, vbar, phibar, cfg, "phi_bar");
  dict.phi_c = phibar.leftCols(codes.Z.rows());
  dict.phi = phibar.rightCols(codes.V.rows());

  renormalize(dict, &codes, cfg.normalization);
  if (cfg.dead_atom_replacement)
    replace_dead_atoms(data.base, &data.mask, dict, codes, cfg.normalization);
  if (cfg.atom_cleanup) {
    // Same reseeding cadence as the unweighted update.
    constexpr int kReseedPeriod = 5;
    bool reseed = iter < 0 || ((iter + 1) % kReseedPeriod == 0 &&
                               iter + kReseedPeriod < cfg.max_iters);
    cleanup_atoms(data.base, &data.mask, dict, codes, cfg.normalization, reseed);
  }
  return dict;
}

double weighted_objective(const MaskedTrainingSet& data, const DictionaryTriple& dict,
                          const CodeMatrices& codes) {
  return 0.5 * ((data.base.Y - dict.psi_c * codes.Z).cwiseProduct(data.mask)).squaredNorm() +
         0.5 * ((data.base.X - dict.phi_c * codes.Z - dict.phi * codes.V)
                    .cwiseProduct(data.mask))
                   .squaredNorm();
}

TrainResult train_weighted(const MaskedTrainingSet& data, const TrainConfig& cfg,
                           const DictionaryTriple& init) {
  check_mask(data);
  if (cfg.max_iters < 1) throw ArgumentError("train_weighted: max_iters must be >= 1");
  // Row-support precondition: every pixel row needs enough valid samples.
  const Eigen::Index atoms = init.gamma() + init.d();
  Eigen::VectorXd row_support = data.mask.rowwise().sum();
  if (!cfg.quiet && row_support.minCoeff() < static_cast<double>(atoms))
    std::cerr << "warn=row_support_below_atoms min=" << row_support.minCoeff()
              << " atoms=" << atoms << "\n";

  TrainResult res;
  res.dict = init;
  momp::SparsityBudget budget{cfg.s_z, cfg.s_v};

  // Same best-iterate policy as the unweighted trainer: atom cleanup makes
  // the trace non-monotone, so keep the lowest-objective pass.
  DictionaryTriple best_dict = res.dict;
  CodeMatrices best_codes;
  double best_obj = std::numeric_limits<double>::infinity();

  double prev = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    res.codes = masked_sparse_code_step(data, res.dict, budget, nullptr, cfg.threads);
    res.dict = weighted_dictionary_update(data, res.codes, cfg, iter);
    double obj = weighted_objective(data, res.dict, res.codes);
    res.trace.push_back(obj);
    if (obj < best_obj) {
      best_obj = obj;
      best_dict = res.dict;
      best_codes = res.codes;
    }
    if (!cfg.quiet) std::cerr << "iter=" << iter << " objective=" << obj << "\n";
    if (cfg.objective_tol > 0 && std::isfinite(prev) &&
        prev - obj < cfg.objective_tol * std::max(prev, 1e-300))
      break;
    prev = obj;
  }
  res.dict = std::move(best_dict);
  res.codes = std::move(best_codes);
  return res;
}

}  // namespace dl
}  // namespace xsep
