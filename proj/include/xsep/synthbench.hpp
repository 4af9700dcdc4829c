#pragma once

#include <iosfwd>
#include <vector>

#include "xsep/coupled_dl.hpp"
#include "xsep/separator.hpp"

namespace xsep {
namespace bench {

struct SynthSpec {
  Eigen::Index n = 40;
  Eigen::Index gamma = 60;
  Eigen::Index d = 60;
  Eigen::Index t = 1500;
  int s_z = 2;
  int s_v = 3;
  double coeff_lo = -1.0;  // uniform coefficient range
  double coeff_hi = 1.0;
  std::vector<double> snr_db;  // +infinity = noiseless
  int trials = 1;
  uint64_t seed = 0;
};

struct SynthData {
  dl::DictionaryTriple truth;
  dl::CodeMatrices codes;
  dl::TrainingSet data;
};

// Model-conformant draw: standard-normal dictionaries (stacked unit-norm
// convention), supports uniform without replacement, coefficients uniform on
// [coeff_lo, coeff_hi].
SynthData generate(const SynthSpec& spec, uint64_t seed);

// Additive white Gaussian noise rescaled so the Frobenius-power SNR hits
// snr_db exactly; +infinity returns the input unchanged.
Eigen::MatrixXd add_noise_snr(const Eigen::MatrixXd& m, double snr_db, uint64_t seed);

// Percentage of truth atoms with a learned atom at distance
// 1 - |<truth, learned>| < 0.01. Non-injective nearest matching by default;
// the injective mode maximizes the number of one-to-one successes.
double atom_recovery_rate(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& learned,
                          bool injective = false);

double nmse(const Eigen::VectorXd& x, const Eigen::VectorXd& x_hat);

struct Table1Row {
  double snr_db;
  double psi_c_pct;
  double phi_c_pct;
  double phi_pct;
};

struct Table2Row {
  double snr_db;
  double nmse_x1;
  double nmse_x2;
};

// Generate -> add noise -> train (random init) -> recovery per dictionary,
// averaged over trials. SNR labels are read against the nominal unit signal
// power of the generating model (absolute noise level 10^(-snr/20)); see the
// note in the implementation. Emits `snr_db,dict,recovery_pct` CSV when out
// given.
std::vector<Table1Row> run_table1(const SynthSpec& spec, const dl::TrainConfig& cfg,
                                  std::ostream* out = nullptr);

// Train per SNR, then separate fresh planted mixtures with the learned
// dictionaries. Emits `snr_db,side,nmse` CSV when out given.
std::vector<Table2Row> run_table2(const SynthSpec& spec, const dl::TrainConfig& cfg,
                                  const sep::BPConfig& bp, int mixtures,
                                  std::ostream* out = nullptr);

}  // namespace bench
}  // namespace xsep
