#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "doctest.h"
#include "xsep/synthbench.hpp"

using namespace xsep;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd unit_gaussian(Eigen::Index r, Eigen::Index c, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j) {
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = g(rng);
    m.col(j).normalize();
  }
  return m;
}

}  // namespace

TEST_CASE("generate produces the requested sparsity and geometry") {
  bench::SynthSpec spec;
  spec.n = 12;
  spec.gamma = 18;
  spec.d = 16;
  spec.t = 50;
  spec.s_z = 2;
  spec.s_v = 3;
  bench::SynthData synth = bench::generate(spec, 11);
  REQUIRE(synth.codes.Z.rows() == 18);
  REQUIRE(synth.codes.V.rows() == 16);
  REQUIRE(synth.codes.Z.cols() == 50);
  for (Eigen::Index tau = 0; tau < 50; ++tau) {
    CHECK((synth.codes.Z.col(tau).array() != 0.0).count() == 2);
    CHECK((synth.codes.V.col(tau).array() != 0.0).count() == 3);
    CHECK(synth.codes.Z.col(tau).cwiseAbs().maxCoeff() <= 1.0);
  }
  // data follows the model exactly
  CHECK((synth.data.Y - synth.truth.psi_c * synth.codes.Z).norm() < 1e-12);
  CHECK((synth.data.X - synth.truth.phi_c * synth.codes.Z - synth.truth.phi * synth.codes.V)
            .norm() < 1e-12);
  // stacked unit-norm truth convention
  for (Eigen::Index j = 0; j < spec.gamma; ++j)
    CHECK(std::sqrt(synth.truth.psi_c.col(j).squaredNorm() +
                    synth.truth.phi_c.col(j).squaredNorm()) ==
          doctest::Approx(1.0).epsilon(1e-12));
  // same seed, same draw; different seed, different draw
  bench::SynthData again = bench::generate(spec, 11);
  CHECK(again.data.Y == synth.data.Y);
  CHECK(bench::generate(spec, 12).data.Y != synth.data.Y);
}

TEST_CASE("zero sparsity budgets give identically zero codes") {
  bench::SynthSpec spec;
  spec.n = 8;
  spec.gamma = 10;
  spec.d = 10;
  spec.t = 5;
  spec.s_z = 0;
  spec.s_v = 0;
  bench::SynthData synth = bench::generate(spec, 3);
  CHECK(synth.codes.Z.isZero(0.0));
  CHECK(synth.codes.V.isZero(0.0));
  CHECK(synth.data.Y.isZero(0.0));
}

TEST_CASE("add_noise_snr hits the requested SNR exactly") {
  Eigen::MatrixXd m = unit_gaussian(30, 40, 5) * 7.3;
  for (double snr : {40.0, 20.0, 6.0}) {
    Eigen::MatrixXd noisy = bench::add_noise_snr(m, snr, 99);
    double measured = 10.0 * std::log10(m.squaredNorm() / (noisy - m).squaredNorm());
    CHECK(measured == doctest::Approx(snr).epsilon(1e-9));
  }
}

TEST_CASE("add_noise_snr passes infinity through bit-identically") {
  Eigen::MatrixXd m = unit_gaussian(6, 7, 8);
  CHECK(bench::add_noise_snr(m, kInf, 1) == m);
}

TEST_CASE("add_noise_snr rejects a zero signal and non-positive SNR") {
  CHECK_THROWS_AS(bench::add_noise_snr(Eigen::MatrixXd::Zero(3, 3), 20.0, 1), ArgumentError);
  CHECK_THROWS_AS(bench::add_noise_snr(Eigen::MatrixXd::Ones(3, 3), -5.0, 1), ArgumentError);
}

TEST_CASE("atom recovery is invariant to permutation and sign flips") {
  Eigen::MatrixXd truth = unit_gaussian(40, 60, 21);
  CHECK(bench::atom_recovery_rate(truth, truth) == 100.0);

  Eigen::MatrixXd shuffled(40, 60);
  std::mt19937_64 rng(22);
  std::vector<int> perm(60);
  for (int j = 0; j < 60; ++j) perm[j] = j;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::bernoulli_distribution flip(0.5);
  for (int j = 0; j < 60; ++j) shuffled.col(perm[j]) = (flip(rng) ? -1.0 : 1.0) * truth.col(j);
  CHECK(bench::atom_recovery_rate(truth, shuffled) == 100.0);
  CHECK(bench::atom_recovery_rate(truth, shuffled, true) == 100.0);
}

TEST_CASE("random dictionaries score near zero recovery at benchmark size") {
  Eigen::MatrixXd truth = unit_gaussian(40, 60, 31);
  Eigen::MatrixXd random = unit_gaussian(40, 60, 32);
  CHECK(bench::atom_recovery_rate(truth, random) <= 2.0);
}

TEST_CASE("non-injective matching can reuse a learned atom, injective cannot") {
  Eigen::MatrixXd truth(4, 2);
  truth << 1, 0, 0, 1, 0, 0, 0, 0;
  Eigen::MatrixXd learned(4, 2);
  learned << 1, 1, 0, 0, 0, 0, 0, 0;  // both columns equal truth atom 0
  CHECK(bench::atom_recovery_rate(truth, learned) == 50.0);
  CHECK(bench::atom_recovery_rate(truth, learned, true) == 50.0);

  Eigen::MatrixXd two_hits(4, 2);
  two_hits << 1, 1, 0, 0, 0, 0, 0, 0;
  Eigen::MatrixXd truth_dup(4, 2);
  truth_dup << 1, 1, 0, 0, 0, 0, 0, 0;  // duplicated truth atom
  CHECK(bench::atom_recovery_rate(truth_dup, learned) == 100.0);
}

TEST_CASE("atom recovery rejects non-unit columns") {
  Eigen::MatrixXd truth = unit_gaussian(10, 5, 41);
  Eigen::MatrixXd bad = truth;
  bad.col(2) *= 1.5;
  CHECK_THROWS_AS(bench::atom_recovery_rate(truth, bad), ArgumentError);
  CHECK_THROWS_AS(bench::atom_recovery_rate(bad, truth), ArgumentError);
}

TEST_CASE("nmse arithmetic") {
  Eigen::VectorXd x(2), xh(2);
  x << 3, 4;
  xh << 3, 0;
  CHECK(bench::nmse(x, xh) == doctest::Approx(0.64).epsilon(1e-12));
  CHECK(bench::nmse(x, x) == 0.0);
  CHECK(bench::nmse(x, Eigen::VectorXd::Zero(2)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(bench::nmse(Eigen::VectorXd::Zero(2), xh), ArgumentError);
}

TEST_CASE("run_table1 is bit-reproducible and emits the documented CSV") {
  bench::SynthSpec spec;
  spec.n = 9;
  spec.gamma = 12;
  spec.d = 12;
  spec.t = 150;
  spec.s_z = 1;
  spec.s_v = 1;
  spec.trials = 2;
  spec.seed = 5;
  spec.snr_db = {kInf};
  dl::TrainConfig cfg;
  cfg.max_iters = 15;
  std::ostringstream csv1, csv2;
  auto rows1 = bench::run_table1(spec, cfg, &csv1);
  auto rows2 = bench::run_table1(spec, cfg, &csv2);
  REQUIRE(rows1.size() == 1);
  CHECK(rows1[0].psi_c_pct == rows2[0].psi_c_pct);
  CHECK(rows1[0].phi_c_pct == rows2[0].phi_c_pct);
  CHECK(rows1[0].phi_pct == rows2[0].phi_pct);
  CHECK(csv1.str() == csv2.str());
  CHECK(csv1.str().rfind("snr_db,dict,recovery_pct\n", 0) == 0);
  CHECK(csv1.str().find("inf,psi_c,") != std::string::npos);
  CHECK(csv1.str().find("inf,phi,") != std::string::npos);
}

TEST_CASE("run_table2 is reproducible and reports both sides") {
  bench::SynthSpec spec;
  spec.n = 9;
  spec.gamma = 12;
  spec.d = 12;
  spec.t = 150;
  spec.s_z = 1;
  spec.s_v = 1;
  spec.seed = 6;
  spec.snr_db = {kInf};
  dl::TrainConfig cfg;
  cfg.max_iters = 15;
  std::ostringstream csv;
  auto rows = bench::run_table2(spec, cfg, {}, 10, &csv);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].nmse_x1 >= 0.0);
  CHECK(rows[0].nmse_x2 >= 0.0);
  auto rows2 = bench::run_table2(spec, cfg, {}, 10, nullptr);
  CHECK(rows[0].nmse_x1 == rows2[0].nmse_x1);
  CHECK(csv.str().rfind("snr_db,side,nmse\n", 0) == 0);
  CHECK(csv.str().find("inf,x1,") != std::string::npos);
  CHECK(csv.str().find("inf,x2,") != std::string::npos);
}
