#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "xsep/coupled_dl.hpp"

using namespace xsep;

namespace {

Eigen::MatrixXd gaussian(Eigen::Index r, Eigen::Index c, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = g(rng);
  return m;
}

dl::TrainingSet realizable_set(const dl::DictionaryTriple& truth, Eigen::Index t, int s_z,
                               int s_v, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coeff(0.2, 1.0);
  std::uniform_int_distribution<Eigen::Index> pc(0, truth.gamma() - 1);
  std::uniform_int_distribution<Eigen::Index> pi(0, truth.d() - 1);
  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(truth.gamma(), t);
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(truth.d(), t);
  for (Eigen::Index j = 0; j < t; ++j) {
    while ((Z.col(j).array() != 0.0).count() < s_z) Z(pc(rng), j) = coeff(rng);
    while ((V.col(j).array() != 0.0).count() < s_v) V(pi(rng), j) = coeff(rng);
  }
  dl::TrainingSet data;
  data.Y = truth.psi_c * Z;
  data.X = truth.phi_c * Z + truth.phi * V;
  return data;
}

}  // namespace

TEST_CASE("overcomplete DCT initialization has the documented structure") {
  Eigen::MatrixXd dct = dl::init_overcomplete_dct(64, 256);
  REQUIRE(dct.rows() == 64);
  REQUIRE(dct.cols() == 256);
  // first atom is the constant (DC) atom
  CHECK((dct.col(0).array() - dct(0, 0)).abs().maxCoeff() < 1e-12);
  CHECK(dct(0, 0) > 0.0);
  for (Eigen::Index j = 0; j < dct.cols(); ++j) {
    CHECK(dct.col(j).norm() == doctest::Approx(1.0).epsilon(1e-12));
    // every non-DC atom has zero mean (DC removed before normalization)
    if (j != 0) CHECK(std::abs(dct.col(j).sum()) < 1e-9);
  }
  // small square case, checked against the closed form of the 1-D kernel:
  // base(i, k) = cos(pi * k * (i + 0.5) / atoms_1d), mean-removed for k > 0,
  // unit-normalized, then the Kronecker square normalized per column.
  Eigen::MatrixXd small = dl::init_overcomplete_dct(4, 9);
  Eigen::MatrixXd base(2, 3);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 3; ++k) base(i, k) = std::cos(M_PI * k * (i + 0.5) / 3.0);
  for (int k = 1; k < 3; ++k) base.col(k).array() -= base.col(k).mean();
  for (int k = 0; k < 3; ++k) base.col(k).normalize();
  Eigen::MatrixXd kron(4, 9);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) kron(2 * i + j, 3 * a + b) = base(i, a) * base(j, b);
  for (int j = 0; j < 9; ++j) {
    kron.col(j).normalize();
    CHECK((kron.col(j) - small.col(j)).norm() < 1e-9);
  }
}

TEST_CASE("init_overcomplete_dct rejects non-square sizes") {
  CHECK_THROWS_AS(dl::init_overcomplete_dct(63, 256), ArgumentError);
  CHECK_THROWS_AS(dl::init_overcomplete_dct(64, 255), ArgumentError);
}

TEST_CASE("random_init respects both normalization conventions") {
  dl::DictionaryTriple st = dl::random_init(6, 8, 5, 3, dl::NormalizationMode::kStacked);
  for (Eigen::Index j = 0; j < st.gamma(); ++j) {
    double stacked = std::sqrt(st.psi_c.col(j).squaredNorm() + st.phi_c.col(j).squaredNorm());
    CHECK(stacked == doctest::Approx(1.0).epsilon(1e-12));
  }
  for (Eigen::Index j = 0; j < st.d(); ++j)
    CHECK(st.phi.col(j).norm() == doctest::Approx(1.0).epsilon(1e-12));

  dl::DictionaryTriple se = dl::random_init(6, 8, 5, 3, dl::NormalizationMode::kSeparate);
  for (Eigen::Index j = 0; j < se.gamma(); ++j) {
    CHECK(se.psi_c.col(j).norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(se.phi_c.col(j).norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("renormalize folds scales into the codes and preserves both products") {
  for (auto mode : {dl::NormalizationMode::kStacked, dl::NormalizationMode::kSeparate}) {
    dl::DictionaryTriple dict;
    dict.psi_c = gaussian(5, 7, 10);
    dict.phi_c = gaussian(5, 7, 11);
    dict.phi = gaussian(5, 4, 12);
    dl::CodeMatrices codes{gaussian(7, 9, 13), gaussian(4, 9, 14)};
    Eigen::MatrixXd y_before = dict.psi_c * codes.Z;
    Eigen::MatrixXd x_before = dict.phi_c * codes.Z + dict.phi * codes.V;
    dl::renormalize(dict, &codes, mode);
    CHECK((dict.psi_c * codes.Z - y_before).norm() <= 1e-9 * y_before.norm());
    if (mode == dl::NormalizationMode::kStacked) {
      CHECK((dict.phi_c * codes.Z + dict.phi * codes.V - x_before).norm() <=
            1e-9 * x_before.norm());
      for (Eigen::Index j = 0; j < dict.gamma(); ++j)
        CHECK(std::sqrt(dict.psi_c.col(j).squaredNorm() + dict.phi_c.col(j).squaredNorm()) ==
              doctest::Approx(1.0).epsilon(1e-12));
    } else {
      for (Eigen::Index j = 0; j < dict.gamma(); ++j) {
        CHECK(dict.psi_c.col(j).norm() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(dict.phi_c.col(j).norm() == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
    for (Eigen::Index j = 0; j < dict.d(); ++j)
      CHECK(dict.phi.col(j).norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("dictionary_update with identity codes reproduces the data columns") {
  // With Z = I and V = 0 each common atom must become its training column
  // (up to the folded normalization), and the x-ray side comes along exactly.
  dl::TrainingSet data;
  data.Y = gaussian(6, 6, 20);
  data.X = gaussian(6, 6, 21);
  dl::CodeMatrices codes{Eigen::MatrixXd::Identity(6, 6), Eigen::MatrixXd::Zero(3, 6)};
  dl::TrainConfig cfg;
  cfg.dead_atom_replacement = false;  // V = 0 means every innovation atom is dead
  dl::DictionaryTriple dict = dl::dictionary_update(data, codes, cfg);
  CHECK((dict.psi_c * codes.Z - data.Y).norm() <= 1e-9 * data.Y.norm());
  CHECK((dict.phi_c * codes.Z - data.X).norm() <= 1e-9 * data.X.norm());
}

TEST_CASE("dictionary_update matches the normal-equations closed form") {
  dl::TrainingSet data;
  data.Y = gaussian(5, 40, 30);
  data.X = gaussian(5, 40, 31);
  dl::CodeMatrices codes{gaussian(7, 40, 32), gaussian(4, 40, 33)};
  Eigen::MatrixXd Z0 = codes.Z, V0 = codes.V;
  dl::TrainConfig cfg;
  cfg.dead_atom_replacement = false;
  dl::DictionaryTriple dict = dl::dictionary_update(data, codes, cfg);

  // independent oracle: D = B C^T (C C^T)^{-1}, full row rank here
  Eigen::MatrixXd psi_oracle = data.Y * Z0.transpose() * (Z0 * Z0.transpose()).inverse();
  Eigen::MatrixXd W0(11, 40);
  W0 << Z0, V0;
  Eigen::MatrixXd xr_oracle = data.X * W0.transpose() * (W0 * W0.transpose()).inverse();
  // renormalization folds scales into the (mutated) codes, so compare products
  CHECK((dict.psi_c * codes.Z - psi_oracle * Z0).norm() <= 1e-9 * data.Y.norm());
  Eigen::MatrixXd xr = dict.phi_c * codes.Z + dict.phi * codes.V;
  Eigen::MatrixXd xr_ref = xr_oracle.leftCols(7) * Z0 + xr_oracle.rightCols(4) * V0;
  CHECK((xr - xr_ref).norm() <= 1e-9 * data.X.norm());
}

TEST_CASE("objective is half the summed squared residual of both modalities") {
  dl::TrainingSet data;
  data.Y = gaussian(4, 10, 40);
  data.X = gaussian(4, 10, 41);
  dl::DictionaryTriple dict = dl::random_init(4, 5, 3, 42);
  dl::CodeMatrices codes{gaussian(5, 10, 43), gaussian(3, 10, 44)};
  double oracle = 0.5 * ((data.Y - dict.psi_c * codes.Z).squaredNorm() +
                         (data.X - dict.phi_c * codes.Z - dict.phi * codes.V).squaredNorm());
  CHECK(dl::objective(data, dict, codes) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("alternating steps never increase the objective under the default config") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    dl::TrainingSet data;
    data.Y = gaussian(8, 60, 100 + seed);
    data.X = gaussian(8, 60, 200 + seed);
    dl::DictionaryTriple dict = dl::random_init(8, 12, 10, 300 + seed);
    dl::TrainConfig cfg;
    cfg.s_z = 2;
    cfg.s_v = 2;
    cfg.quiet = true;
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 4; ++it) {
      dl::CodeMatrices codes = dl::sparse_code_step(data, dict, {cfg.s_z, cfg.s_v});
      double after_code = dl::objective(data, dict, codes);
      CHECK(after_code <= prev * (1.0 + 1e-12));
      dict = dl::dictionary_update(data, codes, cfg);
      double after_update = dl::objective(data, dict, codes);
      CHECK(after_update <= after_code * (1.0 + 1e-12));
      prev = after_update;
    }
  }
}

TEST_CASE("train_coupled trace is consistent with the stopping rule") {
  dl::TrainingSet data;
  data.Y = gaussian(6, 50, 500);
  data.X = gaussian(6, 50, 501);
  dl::TrainConfig cfg;
  cfg.s_z = 2;
  cfg.s_v = 1;
  cfg.max_iters = 30;
  cfg.objective_tol = 1e-4;
  cfg.quiet = true;
  dl::TrainResult res = dl::train_coupled(data, cfg, dl::random_init(6, 9, 7, 502));
  REQUIRE(!res.trace.empty());
  CHECK(res.trace.size() <= 30);
  for (size_t i = 1; i < res.trace.size(); ++i)
    CHECK(res.trace[i] <= res.trace[i - 1] * (1.0 + 1e-12));
  // every non-final step must have failed the stopping test
  for (size_t i = 1; i + 1 < res.trace.size(); ++i)
    CHECK(res.trace[i - 1] - res.trace[i] >= cfg.objective_tol * res.trace[i - 1]);
  CHECK(dl::objective(data, res.dict, res.codes) == doctest::Approx(res.trace.back()));
}

TEST_CASE("objective_tol at or below zero disables early stopping") {
  dl::TrainingSet data;
  data.Y = gaussian(5, 30, 600);
  data.X = gaussian(5, 30, 601);
  dl::TrainConfig cfg;
  cfg.s_z = 1;
  cfg.s_v = 1;
  cfg.max_iters = 12;
  cfg.objective_tol = 0.0;
  cfg.quiet = true;
  dl::TrainResult res = dl::train_coupled(data, cfg, dl::random_init(5, 7, 6, 602));
  CHECK(res.trace.size() == 12);
}

TEST_CASE("coding is independent of the worker count") {
  dl::TrainingSet data;
  data.Y = gaussian(8, 64, 700);
  data.X = gaussian(8, 64, 701);
  dl::DictionaryTriple dict = dl::random_init(8, 12, 10, 702);
  dl::CodeMatrices a = dl::sparse_code_step(data, dict, {2, 3}, 1);
  dl::CodeMatrices b = dl::sparse_code_step(data, dict, {2, 3}, 4);
  CHECK(a.Z == b.Z);  // bit identical
  CHECK(a.V == b.V);
}

TEST_CASE("realizable data reaches a near-zero objective from the truth") {
  dl::DictionaryTriple truth = dl::random_init(10, 14, 12, 800);
  dl::TrainingSet data = realizable_set(truth, 200, 2, 2, 801);
  dl::TrainConfig cfg;
  cfg.s_z = 2;
  cfg.s_v = 2;
  cfg.max_iters = 5;
  cfg.quiet = true;
  dl::TrainResult res = dl::train_coupled(data, cfg, truth);
  CHECK(res.trace.back() <= 1e-12 * (data.Y.squaredNorm() + data.X.squaredNorm()));
}

TEST_CASE("replace_dead_atoms touches only unused atoms and keeps the objective") {
  dl::TrainingSet data;
  data.Y = gaussian(5, 20, 900);
  data.X = gaussian(5, 20, 901);
  dl::DictionaryTriple dict = dl::random_init(5, 6, 4, 902);
  dl::CodeMatrices codes{gaussian(6, 20, 903), gaussian(4, 20, 904)};
  codes.Z.row(2).setZero();  // common atom 2 unused
  codes.V.row(1).setZero();  // innovation atom 1 unused
  dl::DictionaryTriple before = dict;
  double obj_before = dl::objective(data, dict, codes);
  dl::replace_dead_atoms(data, nullptr, dict, codes, dl::NormalizationMode::kStacked);
  CHECK(dl::objective(data, dict, codes) == doctest::Approx(obj_before).epsilon(1e-12));
  for (Eigen::Index j = 0; j < 6; ++j) {
    if (j == 2) continue;
    CHECK(dict.psi_c.col(j) == before.psi_c.col(j));
    CHECK(dict.phi_c.col(j) == before.phi_c.col(j));
  }
  for (Eigen::Index j = 0; j < 4; ++j)
    if (j != 1) CHECK(dict.phi.col(j) == before.phi.col(j));
  // replacements follow the stacked convention
  CHECK(std::sqrt(dict.psi_c.col(2).squaredNorm() + dict.phi_c.col(2).squaredNorm()) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(dict.phi.col(1).norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cleanup_atoms removes near-duplicate common atoms") {
  dl::TrainingSet data;
  data.Y = gaussian(5, 40, 950);
  data.X = gaussian(5, 40, 951);
  dl::DictionaryTriple dict = dl::random_init(5, 6, 4, 952);
  dict.psi_c.col(3) = dict.psi_c.col(0);
  dict.phi_c.col(3) = dict.phi_c.col(0);  // exact duplicate of atom 0
  dl::CodeMatrices codes{gaussian(6, 40, 953), gaussian(4, 40, 954)};
  dl::cleanup_atoms(data, nullptr, dict, codes, dl::NormalizationMode::kStacked);
  Eigen::VectorXd a(10), b(10);
  a << dict.psi_c.col(0), dict.phi_c.col(0);
  b << dict.psi_c.col(3), dict.phi_c.col(3);
  CHECK(std::abs(a.normalized().dot(b.normalized())) < 0.99);
}

TEST_CASE("dictionary persistence round trips matrices and manifest") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "xsep_dl_tests";
  fs::create_directories(dir);
  std::string prefix = (dir / "dict").string();
  dl::DictionaryTriple dict = dl::random_init(6, 9, 7, 1000);
  dl::DictionaryManifest man;
  man.s_z = 3;
  man.s_v = 4;
  man.scale = 2;
  man.weighted = true;
  dl::save_dictionary(prefix, dict, man);
  auto [back, man_back] = dl::load_dictionary(prefix);
  CHECK(back.psi_c == dict.psi_c);
  CHECK(back.phi_c == dict.phi_c);
  CHECK(back.phi == dict.phi);
  CHECK(man_back.s_z == 3);
  CHECK(man_back.s_v == 4);
  CHECK(man_back.scale == 2);
  CHECK(man_back.weighted);
  CHECK_THROWS_AS(dl::load_dictionary((dir / "missing").string()), FormatError);
}
