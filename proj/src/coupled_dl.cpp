#include "xsep/coupled_dl.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <random>
#include <vector>

#include "xsep/numerics.hpp"
#include "xsep/parallel.hpp"
#include "xsep/storage.hpp"

namespace xsep {
namespace dl {

momp::GroupedDictionary DictionaryTriple::stacked() const {
  const Eigen::Index nn = n(), g = gamma(), dd = d();
  momp::GroupedDictionary out;
  out.n_common = g;
  out.theta = Eigen::MatrixXd::Zero(2 * nn, g + dd);
  out.theta.topLeftCorner(nn, g) = psi_c;
  out.theta.bottomLeftCorner(nn, g) = phi_c;
  out.theta.bottomRightCorner(nn, dd) = phi;
  return out;
}

Eigen::MatrixXd CodeMatrices::stacked() const {
  Eigen::MatrixXd out(Z.rows() + V.rows(), Z.cols());
  out.topRows(Z.rows()) = Z;
  out.bottomRows(V.rows()) = V;
  return out;
}

Eigen::MatrixXd init_overcomplete_dct(Eigen::Index n, Eigen::Index atoms) {
  if (n < 1 || atoms < n) throw ArgumentError("init_overcomplete_dct: need atoms >= n >= 1");
  auto isqrt = [](Eigen::Index v) {
    Eigen::Index r = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(v))));
    return r * r == v ? r : Eigen::Index(-1);
  };
  Eigen::Index p = isqrt(n), a = isqrt(atoms);
  if (p < 0 || a < 0) throw ArgumentError("init_overcomplete_dct: n and atoms must be perfect squares");

  Eigen::MatrixXd d1(p, a);
  for (Eigen::Index k = 0; k < a; ++k) {
    for (Eigen::Index i = 0; i < p; ++i)
      d1(i, k) = std::cos(M_PI * static_cast<double>(k) * (static_cast<double>(i) + 0.5) /
                          static_cast<double>(a));
    if (k > 0) d1.col(k).array() -= d1.col(k).mean();
    d1.col(k).normalize();
  }

  // 2-D separable atoms: kron over rows and columns of the patch.
  Eigen::MatrixXd out(n, atoms);
  for (Eigen::Index kr = 0; kr < a; ++kr)
    for (Eigen::Index kc = 0; kc < a; ++kc)
      for (Eigen::Index ir = 0; ir < p; ++ir)
        for (Eigen::Index ic = 0; ic < p; ++ic)
          out(ir * p + ic, kr * a + kc) = d1(ir, kr) * d1(ic, kc);
  for (Eigen::Index k = 0; k < atoms; ++k) out.col(k).normalize();
  return out;
}

void renormalize(DictionaryTriple& dict, CodeMatrices* codes, NormalizationMode mode) {
  const Eigen::Index g = dict.gamma(), dd = dict.d();
  for (Eigen::Index j = 0; j < g; ++j) {
    if (mode == NormalizationMode::kStacked) {
      double s = std::sqrt(dict.psi_c.col(j).squaredNorm() + dict.phi_c.col(j).squaredNorm());
      if (s <= 1e-300) continue;  // collapsed atom, handled by dead-atom logic
      dict.psi_c.col(j) /= s;
      dict.phi_c.col(j) /= s;
      if (codes) codes->Z.row(j) *= s;
    } else {
      double s = dict.psi_c.col(j).norm();
      if (s > 1e-300) {
        dict.psi_c.col(j) /= s;
        if (codes) codes->Z.row(j) *= s;
      }
      double sc = dict.phi_c.col(j).norm();
      if (sc > 1e-300) dict.phi_c.col(j) /= sc;
    }
  }
  for (Eigen::Index j = 0; j < dd; ++j) {
    double s = dict.phi.col(j).norm();
    if (s <= 1e-300) continue;
    dict.phi.col(j) /= s;
    if (codes) codes->V.row(j) *= s;
  }
}

namespace {

DictionaryTriple gaussian_triple(Eigen::Index n, Eigen::Index gamma, Eigen::Index d,
                                 std::mt19937_64& rng, NormalizationMode mode) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  DictionaryTriple t;
  t.psi_c.resize(n, gamma);
  t.phi_c.resize(n, gamma);
  t.phi.resize(n, d);
  for (Eigen::Index j = 0; j < gamma; ++j)
    for (Eigen::Index i = 0; i < n; ++i) t.psi_c(i, j) = gauss(rng);
  for (Eigen::Index j = 0; j < gamma; ++j)
    for (Eigen::Index i = 0; i < n; ++i) t.phi_c(i, j) = gauss(rng);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < n; ++i) t.phi(i, j) = gauss(rng);
  renormalize(t, nullptr, mode);
  return t;
}

}  // namespace

DictionaryTriple random_init(Eigen::Index n, Eigen::Index gamma, Eigen::Index d,
                             uint64_t seed, NormalizationMode mode) {
  std::mt19937_64 rng(seed);
  return gaussian_triple(n, gamma, d, rng, mode);
}

DictionaryTriple dct_init(Eigen::Index n, Eigen::Index gamma, Eigen::Index d,
                          NormalizationMode mode) {
  DictionaryTriple t;
  t.psi_c = init_overcomplete_dct(n, gamma);
  t.phi_c = t.psi_c;
  t.phi = init_overcomplete_dct(n, d);
  renormalize(t, nullptr, mode);
  return t;
}

CodeMatrices sparse_code_step(const TrainingSet& data, const DictionaryTriple& dict,
                              const momp::SparsityBudget& budget, int threads) {
  if (data.X.rows() != data.Y.rows() || data.X.cols() != data.Y.cols())
    throw ArgumentError("sparse_code_step: X and Y shapes differ");
  if (data.n() != dict.n()) throw ArgumentError("sparse_code_step: patch size mismatch");

  const Eigen::Index t = data.t(), nn = data.n();
  momp::GroupedDictionary theta = dict.stacked();
  CodeMatrices codes;
  codes.Z = Eigen::MatrixXd::Zero(dict.gamma(), t);
  codes.V = Eigen::MatrixXd::Zero(dict.d(), t);

  parallel_for(t, threads, [&](std::ptrdiff_t tau) {
    Eigen::VectorXd b(2 * nn);
    b.head(nn) = data.Y.col(tau);
    b.tail(nn) = data.X.col(tau);
    momp::SparseCode code = momp::run(b, theta, budget);
    codes.Z.col(tau) = code.z;
    codes.V.col(tau) = code.v;
  });
  return codes;
}

namespace {

// Residual energy per training column (mask-aware), used to pick replacement
// columns for dead or degenerate atoms.
class WorstColumnPicker {
 public:
  WorstColumnPicker(const TrainingSet& data, const Eigen::MatrixXd* mask,
                    const DictionaryTriple& dict, const CodeMatrices& codes) {
    ry_ = data.Y - dict.psi_c * codes.Z;
    rx_ = data.X - dict.phi_c * codes.Z - dict.phi * codes.V;
    if (mask) {
      ry_ = ry_.cwiseProduct(*mask);
      rx_ = rx_.cwiseProduct(*mask);
    }
    badness_ = ry_.colwise().squaredNorm() + rx_.colwise().squaredNorm();
  }

  Eigen::Index take() {
    Eigen::Index which = 0;
    badness_.maxCoeff(&which);
    badness_(which) = -1.0;  // do not reuse the same column twice
    return which;
  }

  const Eigen::MatrixXd& rx() const { return rx_; }

 private:
  Eigen::MatrixXd ry_, rx_;
  Eigen::VectorXd badness_;
};

void assign_common_atom(const TrainingSet& data, DictionaryTriple& dict,
                        Eigen::Index j, Eigen::Index tau, NormalizationMode mode) {
  dict.psi_c.col(j) = data.Y.col(tau);
  dict.phi_c.col(j) = data.X.col(tau);
  if (mode == NormalizationMode::kStacked) {
    double s = std::sqrt(dict.psi_c.col(j).squaredNorm() + dict.phi_c.col(j).squaredNorm());
    if (s > 1e-300) {
      dict.psi_c.col(j) /= s;
      dict.phi_c.col(j) /= s;
    }
  } else {
    double s = dict.psi_c.col(j).norm();
    if (s > 1e-300) dict.psi_c.col(j) /= s;
    double sc = dict.phi_c.col(j).norm();
    if (sc > 1e-300) dict.phi_c.col(j) /= sc;
  }
}

// Innovation atoms are reseeded from the residual, not the raw x column: the
// raw column is dominated by common content that phi must not absorb, and a
// raw-column reseed gets discarded by the hygiene pass on the next iteration.
void assign_innovation_atom(const Eigen::MatrixXd& rx, DictionaryTriple& dict,
                            Eigen::Index j, Eigen::Index tau) {
  double s = rx.col(tau).norm();
  if (s > 1e-300) dict.phi.col(j) = rx.col(tau) / s;
}

Eigen::MatrixXd unit_columns(Eigen::MatrixXd m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    double s = m.col(j).norm();
    if (s > 1e-300) m.col(j) /= s;
  }
  return m;
}

// Plain MOD fit of all three dictionaries from the given data and codes
// (W = stacked [Z; V]).
DictionaryTriple fit_triple(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& X,
                            const Eigen::MatrixXd& Z, const Eigen::MatrixXd& W) {
  DictionaryTriple d;
  d.psi_c = numerics::min_norm_right_solve(Y, Z);
  Eigen::MatrixXd phibar = numerics::min_norm_right_solve(X, W);
  d.phi_c = phibar.leftCols(Z.rows());
  d.phi = phibar.rightCols(W.rows() - Z.rows());
  return d;
}

// Refit excluding residual-outlier columns. With median_cut the threshold is
// relative to the median column residual: once training is nearly converged,
// correctly coded columns share one residual scale (set by the remaining atom
// error) while a miscoded column sits orders of magnitude above it, and the
// mean is dragged up by exactly the columns that need trimming. During
// training the mean-relative cut is the safe one: a median-relative cut would
// discard the very columns whose atoms are not learned yet.
DictionaryTriple trimmed_refit(const TrainingSet& data, const CodeMatrices& codes,
                               const DictionaryTriple& dict, bool median_cut) {
  constexpr double kTrimFactor = 9.0;
  Eigen::VectorXd bad = (data.Y - dict.psi_c * codes.Z).colwise().squaredNorm();
  bad += (data.X - dict.phi_c * codes.Z - dict.phi * codes.V).colwise().squaredNorm();
  double scale;
  if (median_cut) {
    std::vector<double> sorted(bad.data(), bad.data() + bad.size());
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    scale = sorted[sorted.size() / 2];
  } else {
    scale = bad.mean();
  }
  const double cut = kTrimFactor * scale;
  const Eigen::Index t = data.t();
  Eigen::Index kept = 0;
  for (Eigen::Index i = 0; i < t; ++i) kept += bad(i) <= cut;
  // Never trim below half the data (or below one column per atom): a refit on
  // too small a subset is worse than a biased one.
  const Eigen::Index floor_kept =
      std::max<Eigen::Index>(t / 2, codes.Z.rows() + codes.V.rows());
  if (kept >= t || kept < floor_kept) return dict;

  Eigen::MatrixXd Yk(data.Y.rows(), kept), Xk(data.X.rows(), kept);
  Eigen::MatrixXd Zk(codes.Z.rows(), kept), Wk(codes.Z.rows() + codes.V.rows(), kept);
  for (Eigen::Index i = 0, c = 0; i < t; ++i) {
    if (bad(i) > cut) continue;
    Yk.col(c) = data.Y.col(i);
    Xk.col(c) = data.X.col(i);
    Zk.col(c) = codes.Z.col(i);
    Wk.col(c).head(codes.Z.rows()) = codes.Z.col(i);
    Wk.col(c).tail(codes.V.rows()) = codes.V.col(i);
    ++c;
  }
  return fit_triple(Yk, Xk, Zk, Wk);
}

}  // namespace

void replace_dead_atoms(const TrainingSet& data, const Eigen::MatrixXd* mask,
                        DictionaryTriple& dict, const CodeMatrices& codes,
                        NormalizationMode mode) {
  WorstColumnPicker picker(data, mask, dict, codes);

  for (Eigen::Index j = 0; j < dict.gamma(); ++j) {
    bool dead = codes.Z.row(j).isZero(0.0) ||
                (dict.psi_c.col(j).squaredNorm() + dict.phi_c.col(j).squaredNorm()) <= 1e-300;
    if (!dead) continue;
    assign_common_atom(data, dict, j, picker.take(), mode);
  }
  for (Eigen::Index j = 0; j < dict.d(); ++j) {
    bool dead = codes.V.row(j).isZero(0.0) || dict.phi.col(j).squaredNorm() <= 1e-300;
    if (!dead) continue;
    assign_innovation_atom(picker.rx(), dict, j, picker.take());
  }
}

void cleanup_atoms(const TrainingSet& data, const Eigen::MatrixXd* mask,
                   DictionaryTriple& dict, const CodeMatrices& codes,
                   NormalizationMode mode, bool reseed_outliers) {
  constexpr double kCoherenceLimit = 0.99;
  constexpr int kMinUsage = 4;
  WorstColumnPicker picker(data, mask, dict, codes);

  // Common atoms: coherence measured on the (unit-normalized) stacked columns
  // so the test is convention-independent.
  {
    const Eigen::Index g = dict.gamma(), nn = dict.n();
    Eigen::MatrixXd stacked(2 * nn, g);
    stacked.topRows(nn) = dict.psi_c;
    stacked.bottomRows(nn) = dict.phi_c;
    Eigen::MatrixXd gram = unit_columns(std::move(stacked));
    gram = (gram.transpose() * gram).cwiseAbs();
    for (Eigen::Index j = 0; j < g; ++j) {
      Eigen::Index usage = (codes.Z.row(j).array() != 0.0).count();
      double coherence = 0.0;
      for (Eigen::Index i = 0; i < g; ++i)
        if (i != j) coherence = std::max(coherence, gram(i, j));
      if (coherence <= kCoherenceLimit && usage >= kMinUsage) continue;
      assign_common_atom(data, dict, j, picker.take(), mode);
    }
  }
  {
    Eigen::MatrixXd gram = unit_columns(dict.phi);
    gram = (gram.transpose() * gram).cwiseAbs();
    for (Eigen::Index j = 0; j < dict.d(); ++j) {
      Eigen::Index usage = (codes.V.row(j).array() != 0.0).count();
      double coherence = 0.0;
      for (Eigen::Index i = 0; i < dict.d(); ++i)
        if (i != j) coherence = std::max(coherence, gram(i, j));
      if (coherence <= kCoherenceLimit && usage >= kMinUsage) continue;
      assign_innovation_atom(picker.rx(), dict, j, picker.take());
    }
  }

  if (!reseed_outliers) return;

  // Outlier reseeding. A column represented far worse than the average is the
  // signature of a merged atom: one learned column covering two ground
  // directions, which the coherence and usage triggers never fire on. Spend
  // the least-used atom of the worse-fitting modality on that column. Callers
  // inside the training loop only enable this periodically: a freshly planted
  // atom starts out as the least-used one, and reseeding every pass would
  // sacrifice it again before it can consolidate.
  constexpr double kOutlierFactor = 9.0;
  constexpr int kOutlierCap = 2;
  Eigen::MatrixXd ry = data.Y - dict.psi_c * codes.Z;
  Eigen::MatrixXd rx = data.X - dict.phi_c * codes.Z - dict.phi * codes.V;
  if (mask) {
    ry = ry.cwiseProduct(*mask);
    rx = rx.cwiseProduct(*mask);
  }
  Eigen::VectorXd bad_y = ry.colwise().squaredNorm();
  Eigen::VectorXd bad_x = rx.colwise().squaredNorm();
  Eigen::VectorXd bad = bad_y + bad_x;
  const double mean_bad = bad.mean();
  Eigen::VectorXd z_util = codes.Z.rowwise().squaredNorm();
  Eigen::VectorXd v_util = codes.V.rowwise().squaredNorm();
  for (int k = 0; k < kOutlierCap; ++k) {
    Eigen::Index tau = 0;
    if (bad.maxCoeff(&tau) <= kOutlierFactor * mean_bad) break;
    bad(tau) = -1.0;
    Eigen::Index j = 0;
    if (bad_y(tau) >= bad_x(tau)) {
      z_util.minCoeff(&j);
      z_util(j) = std::numeric_limits<double>::infinity();
      assign_common_atom(data, dict, j, tau, mode);
    } else {
      v_util.minCoeff(&j);
      v_util(j) = std::numeric_limits<double>::infinity();
      assign_innovation_atom(rx, dict, j, tau);
    }
  }
}

DictionaryTriple dictionary_update(const TrainingSet& data, CodeMatrices& codes,
                                   const TrainConfig& cfg, int iter) {
  if (codes.Z.isZero(0.0)) throw NumericalError("collapsed codes");
  Eigen::MatrixXd vbar = codes.stacked();
  if (vbar.isZero(0.0)) throw NumericalError("collapsed codes");

  DictionaryTriple dict = fit_triple(data.Y, data.X, codes.Z, vbar);

  if (cfg.atom_cleanup) {
    // Trimmed refit: the handful of columns the greedy coder assigned a wrong
    // support to would otherwise bias every atom they touch. Refit without the
    // residual outliers; the objective, cleanup, and coding passes still see
    // every column.
    dict = trimmed_refit(data, codes, dict, /*median_cut=*/false);
  }

  renormalize(dict, &codes, cfg.normalization);
  if (cfg.dead_atom_replacement) replace_dead_atoms(data, nullptr, dict, codes, cfg.normalization);
  if (cfg.atom_cleanup) {
    // Standalone calls (iter < 0) always reseed; the training loop reseeds
    // every few passes so a planted atom can consolidate before the next one,
    // and never within the last period so the final dictionary holds no
    // freshly planted, unconsolidated atoms.
    constexpr int kReseedPeriod = 5;
    bool reseed = iter < 0 || ((iter + 1) % kReseedPeriod == 0 &&
                               iter + kReseedPeriod < cfg.max_iters);
    cleanup_atoms(data, nullptr, dict, codes, cfg.normalization, reseed);
  }
  return dict;
}

double objective(const TrainingSet& data, const DictionaryTriple& dict,
                 const CodeMatrices& codes) {
  return 0.5 * (data.Y - dict.psi_c * codes.Z).squaredNorm() +
         0.5 * (data.X - dict.phi_c * codes.Z - dict.phi * codes.V).squaredNorm();
}

TrainResult train_coupled(const TrainingSet& data, const TrainConfig& cfg,
                          const DictionaryTriple& init) {
  if (cfg.max_iters < 1) throw ArgumentError("train_coupled: max_iters must be >= 1");
  if (data.t() < init.gamma() + init.d() && !cfg.quiet)
    std::cerr << "warn=undersampled t=" << data.t()
              << " atoms=" << init.gamma() + init.d() << "\n";

  TrainResult res;
  res.dict = init;
  momp::SparsityBudget budget{cfg.s_z, cfg.s_v};

  // With atom cleanup on, the trace is not monotone: a reseeded atom raises
  // the objective until the following coding pass adopts it. Keep the best
  // iterate seen instead of whatever the last pass happened to leave behind.
  DictionaryTriple best_dict = res.dict;
  CodeMatrices best_codes;
  double best_obj = std::numeric_limits<double>::infinity();

  double prev = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    res.codes = sparse_code_step(data, res.dict, budget, cfg.threads);
    res.dict = dictionary_update(data, res.codes, cfg, iter);
    double obj = objective(data, res.dict, res.codes);
    res.trace.push_back(obj);
    if (obj < best_obj) {
      best_obj = obj;
      best_dict = res.dict;
      best_codes = res.codes;
    }
    if (!cfg.quiet) std::cerr << "iter=" << iter << " objective=" << obj << "\n";
    // non-positive tolerance disables early stopping (mOMP is greedy, so the
    // trace is allowed to fluctuate once near a plateau)
    if (cfg.objective_tol > 0 && std::isfinite(prev) &&
        prev - obj < cfg.objective_tol * std::max(prev, 1e-300))
      break;
    prev = obj;
  }
  res.dict = std::move(best_dict);
  res.codes = std::move(best_codes);

  if (cfg.atom_cleanup) {
    // Polish: starting from the best iterate, alternate coding with a
    // median-trimmed refit. At this point every miscoded column stands out
    // against the shared residual scale of the correctly coded ones, so the
    // refit converges onto the exact generating atoms instead of the slightly
    // biased compromise that full-data least squares settles for.
    //
    // The polish always renormalizes jointly (stacked), whatever the training
    // iterations used: only the joint convention preserves the represented
    // products, and per-mode unit columns would throw away the relative
    // psi_c/phi_c gain of each common atom that the refit just recovered.
    // The separate convention remains a training-iteration device; the
    // polished dictionary comes back in the canonical joint calibration.
    constexpr int kPolishIters = 10;
    DictionaryTriple dict = res.dict;
    CodeMatrices codes;
    for (int p = 0; p < kPolishIters; ++p) {
      codes = sparse_code_step(data, dict, budget, cfg.threads);
      DictionaryTriple fitted = fit_triple(data.Y, data.X, codes.Z, codes.stacked());
      dict = trimmed_refit(data, codes, fitted, /*median_cut=*/true);
      renormalize(dict, &codes, NormalizationMode::kStacked);
    }
    double obj = objective(data, dict, codes);
    if (obj <= best_obj) {
      res.dict = std::move(dict);
      res.codes = std::move(codes);
      res.trace.push_back(obj);
    }
  }
  return res;
}

void save_dictionary(const std::string& prefix, const DictionaryTriple& dict,
                     const DictionaryManifest& manifest) {
  storage::write_matrix(dict.psi_c, prefix + ".psi_c.cdlm");
  storage::write_matrix(dict.phi_c, prefix + ".phi_c.cdlm");
  storage::write_matrix(dict.phi, prefix + ".phi.cdlm");
  storage::IniConfig ini;
  ini.set("dictionary", "n", std::to_string(dict.n()));
  ini.set("dictionary", "gamma", std::to_string(dict.gamma()));
  ini.set("dictionary", "d", std::to_string(dict.d()));
  ini.set("dictionary", "s_z", std::to_string(manifest.s_z));
  ini.set("dictionary", "s_v", std::to_string(manifest.s_v));
  ini.set("dictionary", "scale", std::to_string(manifest.scale));
  ini.set("dictionary", "weighted", manifest.weighted ? "true" : "false");
  ini.save(prefix + ".ini");
}

std::pair<DictionaryTriple, DictionaryManifest> load_dictionary(const std::string& prefix) {
  DictionaryTriple dict;
  dict.psi_c = storage::read_matrix(prefix + ".psi_c.cdlm");
  dict.phi_c = storage::read_matrix(prefix + ".phi_c.cdlm");
  dict.phi = storage::read_matrix(prefix + ".phi.cdlm");
  storage::IniConfig ini = storage::IniConfig::load(prefix + ".ini");
  DictionaryManifest man;
  man.s_z = static_cast<int>(ini.get_int("dictionary", "s_z"));
  man.s_v = static_cast<int>(ini.get_int("dictionary", "s_v"));
  man.scale = static_cast<int>(ini.get_int("dictionary", "scale"));
  man.weighted = ini.get_or("dictionary", "weighted", "false") == "true";
  if (dict.phi_c.rows() != dict.psi_c.rows() || dict.phi_c.cols() != dict.psi_c.cols() ||
      dict.phi.rows() != dict.psi_c.rows())
    throw FormatError("dictionary files disagree on shapes: " + prefix);
  return {dict, man};
}

}  // namespace dl
}  // namespace xsep
