// xsep: coupled dictionary learning and x-ray mixture separation.
//
// Subcommands:
//   train     learn a coupled dictionary from registered visual/x-ray pairs
//   separate  split one x-ray mixture into two sides, guided by photographs
//   bench     synthetic recovery/separation benchmarks and simulated mixtures

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <unordered_set>

#include "xsep/metrics.hpp"
#include "xsep/parallel.hpp"
#include "xsep/pyramid.hpp"
#include "xsep/synthbench.hpp"
#include "xsep/weighted_dl.hpp"

namespace {

using namespace xsep;

std::vector<double> parse_snr_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "inf" || item == "Inf" || item == "INF")
      out.push_back(std::numeric_limits<double>::infinity());
    else
      out.push_back(std::stod(item));
  }
  if (out.empty()) throw ArgumentError("empty SNR list");
  return out;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  if (out.empty()) throw ArgumentError("empty integer list");
  return out;
}

pyramid::PyramidSpec make_pyramid_spec(int levels, const std::vector<int>& eps, int patch) {
  if (levels < 1) throw ArgumentError("multiscale level count must be >= 1");
  if (static_cast<int>(eps.size()) < levels)
    throw ArgumentError("--eps lists " + std::to_string(eps.size()) + " steps but --multiscale " +
                        std::to_string(levels) + " scales were requested");
  pyramid::PyramidSpec spec;
  for (int l = 0; l < levels; ++l) {
    if (eps[l] < 1 || eps[l] > patch)
      throw ArgumentError("step " + std::to_string(eps[l]) + " outside [1, patch]");
    spec.scales.push_back({patch, eps[l]});
  }
  return spec;
}

// Reduce an image to its scale-`scale` low band (scale 1 = the image itself).
ImagePlane reduce_to_scale(const ImagePlane& img, int scale, const std::vector<int>& eps,
                           int patch) {
  ImagePlane cur = img;
  for (int l = 1; l < scale; ++l) {
    if (static_cast<int>(eps.size()) < l)
      throw ArgumentError("--eps too short for --scale " + std::to_string(scale));
    if (cur.rows() < patch || cur.cols() < patch)
      throw ArgumentError("image degenerates below one patch at scale " + std::to_string(l + 1));
    cur = patchwork::extract_grid(cur, {patch, eps[l - 1]}).dc;
  }
  return cur;
}

struct PatchOrigin {
  int image;
  Eigen::Index r, c;
};

// `count` distinct patch origins across all images, uniform without replacement.
std::vector<PatchOrigin> sample_origins(const std::vector<ImagePlane>& images, int patch,
                                        Eigen::Index count, uint64_t seed) {
  std::vector<uint64_t> offsets{0};
  for (const ImagePlane& img : images) {
    if (img.rows() < patch || img.cols() < patch)
      throw ArgumentError("training image smaller than the patch size");
    offsets.push_back(offsets.back() + static_cast<uint64_t>(img.rows() - patch + 1) *
                                           static_cast<uint64_t>(img.cols() - patch + 1));
  }
  uint64_t total = offsets.back();
  if (static_cast<uint64_t>(count) > total)
    throw ArgumentError("requested " + std::to_string(count) + " patches but only " +
                        std::to_string(total) + " distinct origins exist");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<uint64_t> pick(0, total - 1);
  std::unordered_set<uint64_t> chosen;
  std::vector<PatchOrigin> out;
  out.reserve(static_cast<size_t>(count));
  while (static_cast<Eigen::Index>(out.size()) < count) {
    uint64_t g = pick(rng);
    if (!chosen.insert(g).second) continue;
    int image = 0;
    while (g >= offsets[static_cast<size_t>(image) + 1]) ++image;
    uint64_t local = g - offsets[static_cast<size_t>(image)];
    uint64_t cols = static_cast<uint64_t>(images[static_cast<size_t>(image)].cols() - patch + 1);
    out.push_back({image, static_cast<Eigen::Index>(local / cols),
                   static_cast<Eigen::Index>(local % cols)});
  }
  return out;
}

Eigen::VectorXd flatten_patch(const ImagePlane& img, Eigen::Index r, Eigen::Index c, int patch) {
  Eigen::MatrixXd block = img.block(r, c, patch, patch);
  return Eigen::Map<Eigen::VectorXd>(block.data(), block.size());
}

struct SampledTraining {
  dl::TrainingSet data;
  Eigen::MatrixXd mask;  // empty when no masks were given
};

SampledTraining assemble_training(const std::vector<ImagePlane>& visual,
                                  const std::vector<ImagePlane>& xray,
                                  const std::vector<ImagePlane>& masks, int patch,
                                  const std::vector<PatchOrigin>& origins) {
  const Eigen::Index n = static_cast<Eigen::Index>(patch) * patch;
  const Eigen::Index t = static_cast<Eigen::Index>(origins.size());
  SampledTraining out;
  out.data.Y.resize(n, t);
  out.data.X.resize(n, t);
  if (!masks.empty()) out.mask.resize(n, t);
  for (Eigen::Index tau = 0; tau < t; ++tau) {
    const PatchOrigin& o = origins[static_cast<size_t>(tau)];
    Eigen::VectorXd y = flatten_patch(visual[static_cast<size_t>(o.image)], o.r, o.c, patch);
    Eigen::VectorXd x = flatten_patch(xray[static_cast<size_t>(o.image)], o.r, o.c, patch);
    if (masks.empty()) {
      out.data.Y.col(tau) = y.array() - y.mean();
      out.data.X.col(tau) = x.array() - x.mean();
    } else {
      Eigen::VectorXd lam = flatten_patch(masks[static_cast<size_t>(o.image)], o.r, o.c, patch);
      double valid = lam.sum();
      // DC over the valid pixels only; crack values carry no information
      double y_dc = valid > 0 ? y.dot(lam) / valid : 0.0;
      double x_dc = valid > 0 ? x.dot(lam) / valid : 0.0;
      out.data.Y.col(tau) = y.array() - y_dc;
      out.data.X.col(tau) = x.array() - x_dc;
      out.mask.col(tau) = lam;
    }
  }
  return out;
}

void log_kv(const std::string& key, const std::string& value) {
  std::cerr << key << "=" << value << "\n";
}

std::unique_ptr<std::ofstream> open_out(const std::string& path, std::ostream** stream) {
  if (path.empty() || path == "-") {
    *stream = &std::cout;
    return nullptr;
  }
  auto file = std::make_unique<std::ofstream>(path);
  if (!*file) throw ArgumentError("cannot open output file " + path);
  *stream = file.get();
  return file;
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::vector<std::string> visual, xray, mask;
  std::string out;
  std::string eps = "4,4,7,8";
  std::string init = "dct";
  int patch = 8;
  int atoms = 256;
  int atoms_v = 0;
  int s_z = 10;
  int s_v = 8;
  int iters = 100;
  long samples = 46400;
  int scale = 1;
  double tol = 1e-6;
  bool weighted = false;
  bool ridge = false;
};

void run_train(const TrainArgs& a, uint64_t seed, int threads) {
  if (a.visual.size() != a.xray.size())
    throw ArgumentError("--visual and --xray list lengths differ");
  if (a.visual.empty()) throw ArgumentError("no training images given");
  if (!a.mask.empty() && a.mask.size() != a.visual.size())
    throw ArgumentError("--mask list length differs from the image lists");
  if (!a.mask.empty() && a.scale != 1)
    throw ArgumentError("crack masks are only supported at scale 1");
  std::vector<int> eps = parse_int_list(a.eps);

  std::vector<ImagePlane> visual, xray, masks;
  for (size_t i = 0; i < a.visual.size(); ++i) {
    ImagePlane y = storage::read_image(a.visual[i]);
    ImagePlane x = storage::read_image(a.xray[i]);
    if (y.rows() != x.rows() || y.cols() != x.cols())
      throw ArgumentError("visual/x-ray pair " + std::to_string(i) + " has mismatched sizes");
    visual.push_back(reduce_to_scale(y, a.scale, eps, a.patch));
    xray.push_back(reduce_to_scale(x, a.scale, eps, a.patch));
    if (!a.mask.empty()) {
      Eigen::MatrixXd lam = storage::read_mask(a.mask[i]);
      if (lam.rows() != y.rows() || lam.cols() != y.cols())
        throw ArgumentError("mask " + std::to_string(i) + " has mismatched size");
      masks.push_back(lam);
    }
  }

  const Eigen::Index gamma = a.atoms;
  const Eigen::Index d = a.atoms_v > 0 ? a.atoms_v : a.atoms;
  std::vector<PatchOrigin> origins = sample_origins(visual, a.patch, a.samples, seed);
  SampledTraining training = assemble_training(visual, xray, masks, a.patch, origins);
  log_kv("samples", std::to_string(origins.size()));

  dl::TrainConfig cfg;
  cfg.s_z = a.s_z;
  cfg.s_v = a.s_v;
  cfg.max_iters = a.iters;
  cfg.objective_tol = a.tol;
  cfg.seed = seed;
  cfg.threads = threads;
  cfg.ridge = a.ridge;

  const Eigen::Index n = static_cast<Eigen::Index>(a.patch) * a.patch;
  dl::DictionaryTriple init = a.init == "random"
                                  ? dl::random_init(n, gamma, d, seed, cfg.normalization)
                                  : dl::dct_init(n, gamma, d, cfg.normalization);

  auto start = std::chrono::steady_clock::now();
  dl::TrainResult res;
  if (a.weighted) {
    dl::MaskedTrainingSet masked;
    masked.base = training.data;
    masked.mask = training.mask.size() > 0
                      ? training.mask
                      : Eigen::MatrixXd::Ones(training.data.n(), training.data.t());
    // Every pixel row needs enough valid samples for the row-wise updates.
    const Eigen::Index needed = gamma + d;
    for (Eigen::Index i = 0; i < masked.n(); ++i) {
      long valid = static_cast<long>(masked.mask.row(i).sum());
      if (valid < needed)
        throw ArgumentError("weighted training needs at least gamma + d = " +
                            std::to_string(needed) + " valid samples per pixel row; row " +
                            std::to_string(i) + " has " + std::to_string(valid) +
                            " - sample more patches or reduce the atom count");
    }
    res = dl::train_weighted(masked, cfg, init);
  } else {
    res = dl::train_coupled(training.data, cfg, init);
  }
  auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start);

  dl::DictionaryManifest manifest;
  manifest.s_z = a.s_z;
  manifest.s_v = a.s_v;
  manifest.scale = a.scale;
  manifest.weighted = a.weighted;
  dl::save_dictionary(a.out, res.dict, manifest);

  log_kv("iterations", std::to_string(res.trace.size()));
  log_kv("objective", fmt(res.trace.empty() ? 0.0 : res.trace.back()));
  log_kv("train_seconds", fmt(elapsed.count()));
  log_kv("dictionary", a.out);
}

// ---------------------------------------------------------------------------

struct SeparateArgs {
  std::string mixture, y1, y2, out1, out2, raw_prefix, dump_pyramid;
  std::vector<std::string> dict;
  std::string eps = "4,4,7,8";
  int multiscale = 0;  // 0 = single scale
  int step = 4;
  bool include_v = false;
  double rho = 1.0;
  double feas_tol = 1e-6;
  double dual_tol = 1e-6;
  int max_iters = 5000;
};

void run_separate(const SeparateArgs& a, int threads) {
  ImagePlane m = storage::read_image(a.mixture);
  ImagePlane y1 = storage::read_image(a.y1);
  ImagePlane y2 = storage::read_image(a.y2);
  if (y1.rows() != m.rows() || y1.cols() != m.cols() || y2.rows() != m.rows() ||
      y2.cols() != m.cols())
    throw ArgumentError("mixture and side-information images have mismatched sizes");

  std::vector<dl::DictionaryTriple> dicts;
  int patch = 0;
  for (const std::string& prefix : a.dict) {
    auto [dict, manifest] = dl::load_dictionary(prefix);
    double side = std::sqrt(static_cast<double>(dict.n()));
    if (side != std::floor(side))
      throw FormatError("dictionary " + prefix + " has a non-square patch dimension");
    if (patch == 0)
      patch = static_cast<int>(side);
    else if (patch != static_cast<int>(side))
      throw ArgumentError("dictionaries disagree on the patch size");
    dicts.push_back(std::move(dict));
  }
  if (dicts.empty()) throw ArgumentError("at least one --dict prefix is required");

  sep::BPConfig cfg;
  cfg.rho = a.rho;
  cfg.feas_tol = a.feas_tol;
  cfg.dual_tol = a.dual_tol;
  cfg.max_iters = a.max_iters;

  patchwork::SeparationStats stats;
  ImagePlane x1, x2;
  auto start = std::chrono::steady_clock::now();
  if (a.multiscale > 0) {
    pyramid::PyramidSpec spec = make_pyramid_spec(a.multiscale, parse_int_list(a.eps), patch);
    if (dicts.size() < spec.levels())
      log_kv("warn", "only " + std::to_string(dicts.size()) + " dictionaries for " +
                         std::to_string(spec.levels()) + " scales; deepest one reused");
    if (!a.dump_pyramid.empty()) {
      pyramid::Pyramid p = pyramid::decompose(m, spec);
      for (size_t l = 0; l < p.low.size(); ++l)
        storage::write_matrix(p.low[l], a.dump_pyramid + ".low" + std::to_string(l) + ".cdlm");
      for (size_t l = 0; l < p.high.size(); ++l)
        storage::write_matrix(p.high[l], a.dump_pyramid + ".high" + std::to_string(l) + ".cdlm");
    }
    std::tie(x1, x2) =
        pyramid::separate_multiscale(m, y1, y2, spec, dicts, cfg, a.include_v, threads, &stats);
  } else {
    std::tie(x1, x2) = patchwork::separate_single_scale(m, y1, y2, dicts.front(),
                                                        {patch, a.step}, cfg, a.include_v,
                                                        threads, &stats);
  }
  auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start);

  storage::write_image(x1, a.out1);
  storage::write_image(x2, a.out2);
  if (!a.raw_prefix.empty()) {
    storage::write_matrix(x1, a.raw_prefix + ".x1.cdlm");
    storage::write_matrix(x2, a.raw_prefix + ".x2.cdlm");
  }

  log_kv("patches", std::to_string(stats.patches));
  log_kv("projected", std::to_string(stats.projected));
  log_kv("not_converged", std::to_string(stats.not_converged));
  log_kv("failed", std::to_string(stats.failed));
  log_kv("separate_seconds", fmt(elapsed.count()));
}

// ---------------------------------------------------------------------------

struct BenchCommon {
  std::string snr = "inf";
  std::string out = "-";
  long n = 40, gamma = 60, d = 60, t = 1500;
  int s_z = 2, s_v = 3;
  int trials = 1;
  int iters = 100;
};

bench::SynthSpec make_spec(const BenchCommon& b, uint64_t seed) {
  bench::SynthSpec spec;
  spec.n = b.n;
  spec.gamma = b.gamma;
  spec.d = b.d;
  spec.t = b.t;
  spec.s_z = b.s_z;
  spec.s_v = b.s_v;
  spec.trials = b.trials;
  spec.seed = seed;
  spec.snr_db = parse_snr_list(b.snr);
  return spec;
}

void run_bench_mix(const std::string& path_a, const std::string& path_b,
                   const std::vector<std::string>& dict_prefixes, int multiscale,
                   const std::string& eps_text, int patch, int atoms, int train_iters,
                   const std::string& out_path, uint64_t seed, int threads) {
  ImagePlane a = storage::read_image(path_a);
  ImagePlane b = storage::read_image(path_b);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ArgumentError("simulated-mix inputs have mismatched sizes");
  ImagePlane m = a + b;
  std::vector<int> eps = parse_int_list(eps_text);

  std::vector<dl::DictionaryTriple> dicts;
  if (!dict_prefixes.empty()) {
    for (const std::string& prefix : dict_prefixes) dicts.push_back(dl::load_dictionary(prefix).first);
    patch = static_cast<int>(std::lround(std::sqrt(static_cast<double>(dicts.front().n()))));
  } else {
    // No dictionaries given: learn one per scale from the inputs themselves,
    // treating each image as its own side information.
    log_kv("warn", "no --dict given; training throwaway dictionaries from the inputs");
    int levels = std::max(multiscale, 1);
    ImagePlane la = a, lb = b;
    for (int l = 0; l < levels; ++l) {
      dl::TrainingSet data;
      patchwork::PatchGridSpec gspec{patch, 2};
      patchwork::PatchGrid ga = patchwork::extract_grid(la, gspec);
      patchwork::PatchGrid gb = patchwork::extract_grid(lb, gspec);
      data.Y.resize(ga.residuals.rows(), ga.residuals.cols() + gb.residuals.cols());
      data.Y << ga.residuals, gb.residuals;
      data.X = data.Y;  // image doubles as both modalities
      dl::TrainConfig cfg;
      cfg.s_z = 4;
      cfg.s_v = 2;
      cfg.max_iters = train_iters;
      cfg.quiet = true;
      cfg.threads = threads;
      const Eigen::Index n = static_cast<Eigen::Index>(patch) * patch;
      dicts.push_back(dl::train_coupled(data, cfg, dl::random_init(n, atoms, atoms / 2, seed + l))
                          .dict);
      if (l + 1 < levels) {
        int step = l < static_cast<int>(eps.size()) ? eps[static_cast<size_t>(l)] : 4;
        la = patchwork::extract_grid(la, {patch, step}).dc;
        lb = patchwork::extract_grid(lb, {patch, step}).dc;
      }
    }
  }

  sep::BPConfig cfg;
  patchwork::SeparationStats stats;
  ImagePlane x1, x2;
  if (multiscale > 0) {
    pyramid::PyramidSpec spec = make_pyramid_spec(multiscale, eps, patch);
    std::tie(x1, x2) = pyramid::separate_multiscale(m, a, b, spec, dicts, cfg, true, threads, &stats);
  } else {
    std::tie(x1, x2) = patchwork::separate_single_scale(m, a, b, dicts.front(), {patch, 4}, cfg,
                                                        true, threads, &stats);
  }
  log_kv("patches", std::to_string(stats.patches));
  log_kv("failed", std::to_string(stats.failed));

  ImagePlane half = 0.5 * m;
  std::ostream* out = nullptr;
  auto file = open_out(out_path, &out);
  *out << "side,method,psnr_db,ssim\n";
  *out << "x1,separated," << fmt(metrics::psnr(a, x1)) << "," << fmt(metrics::ssim(a, x1)) << "\n";
  *out << "x2,separated," << fmt(metrics::psnr(b, x2)) << "," << fmt(metrics::ssim(b, x2)) << "\n";
  *out << "x1,baseline_half," << fmt(metrics::psnr(a, half)) << "," << fmt(metrics::ssim(a, half))
       << "\n";
  *out << "x2,baseline_half," << fmt(metrics::psnr(b, half)) << "," << fmt(metrics::ssim(b, half))
       << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coupled dictionary learning for x-ray mixture separation"};
  app.set_config("--config", "", "INI configuration file with the same keys");
  app.require_subcommand(1);

  int threads = 0;
  uint64_t seed = 0;
  app.add_option("--threads", threads, "worker threads (0 = XSEP_THREADS or all cores)")
      ->capture_default_str();
  app.add_option("--seed", seed, "RNG seed")->capture_default_str();

  TrainArgs ta;
  CLI::App* train = app.add_subcommand("train", "learn a coupled dictionary");
  train->fallthrough();
  train->add_option("--visual", ta.visual, "visual (photograph) images")->required();
  train->add_option("--xray", ta.xray, "x-ray images, paired with --visual")->required();
  train->add_option("--mask", ta.mask, "binary crack masks, paired with the images");
  train->add_option("--out", ta.out, "output dictionary prefix")->required();
  train->add_option("--patch", ta.patch, "patch side length")->capture_default_str();
  train->add_option("--atoms", ta.atoms, "common atoms (gamma)")->capture_default_str();
  train->add_option("--atoms-v", ta.atoms_v, "innovation atoms (default: --atoms)")
      ->capture_default_str();
  train->add_option("--sz", ta.s_z, "common sparsity budget")->capture_default_str();
  train->add_option("--sv", ta.s_v, "innovation sparsity budget")->capture_default_str();
  train->add_option("--iters", ta.iters, "training iterations")->capture_default_str();
  train->add_option("--samples", ta.samples, "training patches to sample")->capture_default_str();
  train->add_option("--scale", ta.scale, "pyramid scale to train for (1 = finest)")
      ->capture_default_str();
  train->add_option("--eps", ta.eps, "per-scale steps, comma separated")->capture_default_str();
  train->add_option("--tol", ta.tol, "relative objective stopping tolerance")
      ->capture_default_str();
  train->add_option("--init", ta.init, "dct or random")->capture_default_str();
  train->add_flag("--weighted", ta.weighted, "crack-masked training");
  train->add_flag("--ridge", ta.ridge, "Tikhonov-regularize weighted row updates");

  SeparateArgs sa;
  CLI::App* separate = app.add_subcommand("separate", "separate an x-ray mixture");
  separate->fallthrough();
  separate->add_option("--mixture", sa.mixture, "mixed x-ray image")->required();
  separate->add_option("--y1", sa.y1, "side-1 photograph")->required();
  separate->add_option("--y2", sa.y2, "side-2 photograph")->required();
  separate->add_option("--dict", sa.dict, "dictionary prefixes, finest scale first")->required();
  separate->add_option("--out1", sa.out1, "side-1 output image")->required();
  separate->add_option("--out2", sa.out2, "side-2 output image")->required();
  separate->add_option("--raw-prefix", sa.raw_prefix, "also write lossless matrices");
  separate->add_option("--dump-pyramid", sa.dump_pyramid,
                       "write the mixture pyramid planes as matrices (multiscale only)");
  separate->add_option("--multiscale", sa.multiscale, "pyramid levels (0 = single scale)")
      ->capture_default_str();
  separate->add_option("--eps", sa.eps, "per-scale steps, comma separated")->capture_default_str();
  separate->add_option("--step", sa.step, "single-scale patch step")->capture_default_str();
  separate->add_flag("--include-v", sa.include_v, "add the innovation part to the outputs");
  separate->add_option("--rho", sa.rho, "ADMM penalty")->capture_default_str();
  separate->add_option("--feas-tol", sa.feas_tol, "relative feasibility tolerance")
      ->capture_default_str();
  separate->add_option("--dual-tol", sa.dual_tol, "relative dual tolerance")
      ->capture_default_str();
  separate->add_option("--max-iters", sa.max_iters, "ADMM iteration cap")->capture_default_str();

  CLI::App* bench_cmd = app.add_subcommand("bench", "synthetic benchmarks");
  bench_cmd->fallthrough();
  bench_cmd->require_subcommand(1);

  BenchCommon b1;
  b1.trials = 5;
  CLI::App* table1 = bench_cmd->add_subcommand("table1", "dictionary recovery vs SNR");
  table1->fallthrough();
  table1->add_option("--snr", b1.snr, "SNR list in dB, 'inf' = noiseless")->capture_default_str();
  table1->add_option("--trials", b1.trials, "trials per SNR")->capture_default_str();
  table1->add_option("--n", b1.n)->capture_default_str();
  table1->add_option("--gamma", b1.gamma)->capture_default_str();
  table1->add_option("--d", b1.d)->capture_default_str();
  table1->add_option("--t", b1.t)->capture_default_str();
  table1->add_option("--sz", b1.s_z)->capture_default_str();
  table1->add_option("--sv", b1.s_v)->capture_default_str();
  table1->add_option("--iters", b1.iters)->capture_default_str();
  table1->add_option("--out", b1.out, "CSV destination ('-' = stdout)")->capture_default_str();

  BenchCommon b2;
  int mixtures = 200;
  CLI::App* table2 = bench_cmd->add_subcommand("table2", "separation NMSE vs SNR");
  table2->fallthrough();
  table2->add_option("--snr", b2.snr, "SNR list in dB, 'inf' = noiseless")->capture_default_str();
  table2->add_option("--mixtures", mixtures, "mixtures per SNR")->capture_default_str();
  table2->add_option("--n", b2.n)->capture_default_str();
  table2->add_option("--gamma", b2.gamma)->capture_default_str();
  table2->add_option("--d", b2.d)->capture_default_str();
  table2->add_option("--t", b2.t)->capture_default_str();
  table2->add_option("--sz", b2.s_z)->capture_default_str();
  table2->add_option("--sv", b2.s_v)->capture_default_str();
  table2->add_option("--iters", b2.iters)->capture_default_str();
  table2->add_option("--out", b2.out, "CSV destination ('-' = stdout)")->capture_default_str();

  std::string mix_a, mix_b, mix_out = "-", mix_eps = "4,4,7,8";
  std::vector<std::string> mix_dict;
  int mix_multiscale = 0, mix_patch = 8, mix_atoms = 96, mix_train_iters = 15;
  CLI::App* mix = bench_cmd->add_subcommand("mix", "simulated two-image mixture");
  mix->fallthrough();
  mix->add_option("a", mix_a, "ground-truth side 1")->required();
  mix->add_option("b", mix_b, "ground-truth side 2")->required();
  mix->add_option("--dict", mix_dict, "dictionary prefixes, finest scale first");
  mix->add_option("--multiscale", mix_multiscale, "pyramid levels (0 = single scale)")
      ->capture_default_str();
  mix->add_option("--eps", mix_eps, "per-scale steps")->capture_default_str();
  mix->add_option("--patch", mix_patch, "patch side for throwaway training")
      ->capture_default_str();
  mix->add_option("--atoms", mix_atoms, "atoms for throwaway training")->capture_default_str();
  mix->add_option("--train-iters", mix_train_iters, "iterations for throwaway training")
      ->capture_default_str();
  mix->add_option("--out", mix_out, "CSV destination ('-' = stdout)")->capture_default_str();

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      int code = app.exit(e);
      return code == 0 ? 0 : 2;
    }
    threads = resolve_threads(threads);
    log_kv("threads", std::to_string(threads));

    if (*train) run_train(ta, seed, threads);
    if (*separate) run_separate(sa, threads);
    if (*table1) {
      std::ostream* out = nullptr;
      auto file = open_out(b1.out, &out);
      dl::TrainConfig cfg;
      cfg.max_iters = b1.iters;
      cfg.threads = threads;
      bench::run_table1(make_spec(b1, seed), cfg, out);
    }
    if (*table2) {
      std::ostream* out = nullptr;
      auto file = open_out(b2.out, &out);
      dl::TrainConfig cfg;
      cfg.max_iters = b2.iters;
      cfg.threads = threads;
      bench::run_table2(make_spec(b2, seed), cfg, sep::BPConfig{}, mixtures, out);
    }
    if (*mix)
      run_bench_mix(mix_a, mix_b, mix_dict, mix_multiscale, mix_eps, mix_patch, mix_atoms,
                    mix_train_iters, mix_out, seed, threads);
    return 0;
  } catch (const xsep::ArgumentError& e) {
    std::cerr << "error=argument msg=\"" << e.what() << "\"\n";
    return 2;
  } catch (const xsep::FormatError& e) {
    std::cerr << "error=format msg=\"" << e.what() << "\"\n";
    return 3;
  } catch (const xsep::NumericalError& e) {
    std::cerr << "error=numerical msg=\"" << e.what() << "\"\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error=internal msg=\"" << e.what() << "\"\n";
    return 1;
  }
}
