#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "xsep/momp.hpp"

namespace xsep {
namespace dl {

// The three coupled dictionaries. Convention (stacked normalization): every
// stacked common column [psi_c_j; phi_c_j] and every innovation column phi_j
// has unit l2 norm.
struct DictionaryTriple {
  Eigen::MatrixXd psi_c;  // n x gamma, visual common
  Eigen::MatrixXd phi_c;  // n x gamma, x-ray common
  Eigen::MatrixXd phi;    // n x d, x-ray innovation

  Eigen::Index n() const { return psi_c.rows(); }
  Eigen::Index gamma() const { return psi_c.cols(); }
  Eigen::Index d() const { return phi.cols(); }

  // [[psi_c, 0], [phi_c, phi]], the pursuit dictionary.
  momp::GroupedDictionary stacked() const;
};

struct TrainingSet {
  Eigen::MatrixXd Y;  // n x t visual patches, DC-removed columns
  Eigen::MatrixXd X;  // n x t x-ray patches, DC-removed columns

  Eigen::Index n() const { return Y.rows(); }
  Eigen::Index t() const { return Y.cols(); }
};

struct CodeMatrices {
  Eigen::MatrixXd Z;  // gamma x t
  Eigen::MatrixXd V;  // d x t

  Eigen::MatrixXd stacked() const;  // [Z; V]
};

enum class NormalizationMode {
  kStacked,   // unit [psi_c_j; phi_c_j], the default
  kSeparate,  // unit psi_c_j, phi_c_j and phi_j each; psi scale folds into Z,
              // phi scale into V, so the x-ray common product is only
              // preserved up to the phi_c_j rescale (codes are refreshed by
              // the next coding pass anyway)
};

struct TrainConfig {
  int s_z = 0;
  int s_v = 0;
  int max_iters = 100;
  double objective_tol = 1e-6;
  bool dead_atom_replacement = true;
  // After each update, additionally replace near-duplicate atoms (coherence
  // above 0.99), atoms used by fewer than 4 training columns, and the
  // least-used atoms with residual-outlier columns. Off by default (it trades
  // the monotone objective trace for much better atom identifiability); the
  // synthetic benchmark protocol turns it on.
  bool atom_cleanup = false;
  NormalizationMode normalization = NormalizationMode::kStacked;
  uint64_t seed = 0;
  int threads = 0;
  bool ridge = false;          // weighted updates only
  bool quiet = false;          // suppress key=value progress lines on stderr
};

struct TrainResult {
  DictionaryTriple dict;
  CodeMatrices codes;
  std::vector<double> trace;  // objective after each outer iteration
};

// 2-D overcomplete DCT initialization, Kronecker square of a 1-D overcomplete
// DCT with mean-removed (k>0) unit-norm columns. Requires square n and atoms.
Eigen::MatrixXd init_overcomplete_dct(Eigen::Index n, Eigen::Index atoms);

// Standard-normal triple, columns normalized per the given convention.
DictionaryTriple random_init(Eigen::Index n, Eigen::Index gamma, Eigen::Index d,
                             uint64_t seed,
                             NormalizationMode mode = NormalizationMode::kStacked);

// DCT-initialized triple (phi_c starts as a copy of psi_c's x-ray role).
DictionaryTriple dct_init(Eigen::Index n, Eigen::Index gamma, Eigen::Index d,
                          NormalizationMode mode = NormalizationMode::kStacked);

// One mOMP pass over all t columns; parallel over columns, result independent
// of the worker count.
CodeMatrices sparse_code_step(const TrainingSet& data, const DictionaryTriple& dict,
                              const momp::SparsityBudget& budget, int threads = 0);

// MOD-style closed-form update followed by renormalization (inverse scales
// folded into the code rows) and optional dead-atom replacement. Mutates the
// codes so that the represented products are unchanged. `iter` is the outer
// training iteration; the outlier-reseeding part of atom cleanup runs
// periodically during training but always for standalone calls (iter < 0).
DictionaryTriple dictionary_update(const TrainingSet& data, CodeMatrices& codes,
                                   const TrainConfig& cfg, int iter = -1);

double objective(const TrainingSet& data, const DictionaryTriple& dict,
                 const CodeMatrices& codes);

TrainResult train_coupled(const TrainingSet& data, const TrainConfig& cfg,
                          const DictionaryTriple& init);

// --- shared internals, also used by the weighted variant --------------------

// Applies the unit-norm convention in place; scales code rows inversely when
// codes are given so that psi_c Z and phi_c Z + phi V are preserved.
void renormalize(DictionaryTriple& dict, CodeMatrices* codes, NormalizationMode mode);

// Replaces zero-usage atoms with the worst-represented training column
// (mask-aware when a mask is given). Zero-usage atoms do not contribute to
// the objective, so replacement never changes it.
void replace_dead_atoms(const TrainingSet& data, const Eigen::MatrixXd* mask,
                        DictionaryTriple& dict, const CodeMatrices& codes,
                        NormalizationMode mode);

// Aggressive hygiene pass (TrainConfig::atom_cleanup): also replaces atoms
// nearly collinear with another atom, atoms with very low usage, and (when
// reseed_outliers is set) reseeds the least-used atoms from residual-outlier
// training columns.
void cleanup_atoms(const TrainingSet& data, const Eigen::MatrixXd* mask,
                   DictionaryTriple& dict, const CodeMatrices& codes,
                   NormalizationMode mode, bool reseed_outliers = true);

// --- persistence -------------------------------------------------------------
// Three CDLM files <prefix>.psi_c.cdlm / .phi_c.cdlm / .phi.cdlm plus an INI
// manifest <prefix>.ini with n, gamma, d, s_z, s_v, scale, weighted.

struct DictionaryManifest {
  int s_z = 0;
  int s_v = 0;
  int scale = 1;
  bool weighted = false;
};

void save_dictionary(const std::string& prefix, const DictionaryTriple& dict,
                     const DictionaryManifest& manifest);
std::pair<DictionaryTriple, DictionaryManifest> load_dictionary(const std::string& prefix);

}  // namespace dl
}  // namespace xsep
