#pragma once

#include "xsep/coupled_dl.hpp"

namespace xsep {
namespace dl {

// Training set with a binary validity mask (0 = crack pixel, excluded from
// the objective; 1 = valid).
struct MaskedTrainingSet {
  TrainingSet base;
  Eigen::MatrixXd mask;  // n x t, entries in {0, 1}

  Eigen::Index n() const { return base.n(); }
  Eigen::Index t() const { return base.t(); }
};

// mOMP coding on mask-zeroed signals and row-masked dictionaries. Columns
// whose mask is all-zero get a zero code; their indices are reported through
// `flagged` when given.
CodeMatrices masked_sparse_code_step(const MaskedTrainingSet& data,
                                     const DictionaryTriple& dict,
                                     const momp::SparsityBudget& budget,
                                     std::vector<Eigen::Index>* flagged = nullptr,
                                     int threads = 0);

// Row-wise closed-form update: row i of psi_c solves c_i = psi_i A_i with
// A_i = sum over valid samples of z z^T, and likewise for [phi_c phi] with
// the stacked codes. Singular A_i is an error unless cfg.ridge is set
// (Tikhonov magnitude 1e-8 trace(A_i)/dim). Mutates codes through the shared
// renormalization.
DictionaryTriple weighted_dictionary_update(const MaskedTrainingSet& data,
                                            CodeMatrices& codes, const TrainConfig& cfg,
                                            int iter = -1);

double weighted_objective(const MaskedTrainingSet& data, const DictionaryTriple& dict,
                          const CodeMatrices& codes);

TrainResult train_weighted(const MaskedTrainingSet& data, const TrainConfig& cfg,
                           const DictionaryTriple& init);

}  // namespace dl
}  // namespace xsep
