#include "xsep/patchwork.hpp"

#include <atomic>
#include <cmath>
#include <iostream>

#include "xsep/parallel.hpp"

namespace xsep {
namespace patchwork {

namespace {

void check_spec(const PatchGridSpec& spec) {
  if (spec.patch_side < 1) throw ArgumentError("patch_side must be >= 1");
  if (spec.step < 1 || spec.step > spec.patch_side)
    throw ArgumentError("step must satisfy 1 <= step <= patch_side");
}

inline Eigen::Index clamp_idx(Eigen::Index v, Eigen::Index hi) {
  return v < 0 ? 0 : (v >= hi ? hi - 1 : v);
}

}  // namespace

PatchGrid extract_grid(const ImagePlane& img, const PatchGridSpec& spec) {
  check_spec(spec);
  const Eigen::Index h = img.rows(), w = img.cols();
  if (h < spec.patch_side || w < spec.patch_side)
    throw ArgumentError("image smaller than one patch");

  PatchGrid grid;
  grid.grid_h = static_cast<int>(h / spec.step);
  grid.grid_w = static_cast<int>(w / spec.step);
  const Eigen::Index n = static_cast<Eigen::Index>(spec.patch_side) * spec.patch_side;
  grid.dc.resize(grid.grid_h, grid.grid_w);
  grid.residuals.resize(n, static_cast<Eigen::Index>(grid.grid_h) * grid.grid_w);

  for (int u1 = 0; u1 < grid.grid_h; ++u1) {
    for (int u2 = 0; u2 < grid.grid_w; ++u2) {
      Eigen::Index col = grid.index(u1, u2);
      double sum = 0.0;
      // border patches replicate the last row/column
      for (int r = 0; r < spec.patch_side; ++r)
        for (int c = 0; c < spec.patch_side; ++c) {
          double v = img(clamp_idx(static_cast<Eigen::Index>(u1) * spec.step + r, h),
                         clamp_idx(static_cast<Eigen::Index>(u2) * spec.step + c, w));
          grid.residuals(static_cast<Eigen::Index>(r) * spec.patch_side + c, col) = v;
          sum += v;
        }
      double dc = sum / static_cast<double>(n);
      grid.dc(u1, u2) = dc;
      grid.residuals.col(col).array() -= dc;
    }
  }
  return grid;
}

ImagePlane overlap_add(const Eigen::MatrixXd& patches, const PatchGridSpec& spec,
                       Eigen::Index height, Eigen::Index width) {
  check_spec(spec);
  const int grid_h = static_cast<int>(height / spec.step);
  const int grid_w = static_cast<int>(width / spec.step);
  if (patches.cols() != static_cast<Eigen::Index>(grid_h) * grid_w)
    throw ArgumentError("overlap_add: patch count does not match the grid");
  if (patches.rows() != static_cast<Eigen::Index>(spec.patch_side) * spec.patch_side)
    throw ArgumentError("overlap_add: patch length mismatch");

  ImagePlane sum = ImagePlane::Zero(height, width);
  Eigen::MatrixXd count = Eigen::MatrixXd::Zero(height, width);
  for (int u1 = 0; u1 < grid_h; ++u1)
    for (int u2 = 0; u2 < grid_w; ++u2) {
      Eigen::Index col = static_cast<Eigen::Index>(u1) * grid_w + u2;
      for (int r = 0; r < spec.patch_side; ++r) {
        Eigen::Index rr = static_cast<Eigen::Index>(u1) * spec.step + r;
        if (rr >= height) break;  // padding region discarded
        for (int c = 0; c < spec.patch_side; ++c) {
          Eigen::Index cc = static_cast<Eigen::Index>(u2) * spec.step + c;
          if (cc >= width) break;
          sum(rr, cc) += patches(static_cast<Eigen::Index>(r) * spec.patch_side + c, col);
          count(rr, cc) += 1.0;
        }
      }
    }
  return sum.cwiseQuotient(count.cwiseMax(1.0));
}

std::pair<double, double> dc_split(double m_dc, double y1_dc, double y2_dc) {
  if (!std::isfinite(m_dc) || !std::isfinite(y1_dc) || !std::isfinite(y2_dc))
    throw ArgumentError("dc_split: non-finite input");
  double a = std::max(y1_dc, 0.0);
  double bsum = a + std::max(y2_dc, 0.0);
  double d1 = bsum < 1e-9 ? 0.5 * m_dc : m_dc * (a / bsum);
  return {d1, m_dc - d1};  // conserves mass exactly
}

namespace {

std::pair<ImagePlane, ImagePlane> separate_core(
    const ImagePlane& m, const ImagePlane& y1, const ImagePlane& y2,
    const dl::DictionaryTriple& dict, const PatchGridSpec& spec,
    const sep::BPConfig& cfg, bool include_v, bool add_dc, int threads,
    SeparationStats* stats) {
  if (m.rows() != y1.rows() || m.cols() != y1.cols() || m.rows() != y2.rows() ||
      m.cols() != y2.cols())
    throw ArgumentError("separate_single_scale: image dimensions differ");
  if (static_cast<Eigen::Index>(spec.patch_side) * spec.patch_side != dict.n())
    throw ArgumentError("separate_single_scale: dictionary patch size mismatch");

  PatchGrid gm = extract_grid(m, spec);
  PatchGrid g1 = extract_grid(y1, spec);
  PatchGrid g2 = extract_grid(y2, spec);
  sep::SeparationOperator op(dict, cfg);

  const Eigen::Index total = gm.residuals.cols();
  Eigen::MatrixXd p1(dict.n(), total), p2(dict.n(), total);
  std::atomic<long> projected{0}, not_converged{0}, failed{0};

  parallel_for(total, threads, [&](std::ptrdiff_t col) {
    sep::SeparationSolution sol;
    try {
      sol = op.solve_with_projection(gm.residuals.col(col), g1.residuals.col(col),
                                     g2.residuals.col(col));
    } catch (const NumericalError&) {
      int u1 = static_cast<int>(col) / gm.grid_w;
      int u2 = static_cast<int>(col) % gm.grid_w;
      std::cerr << "warn=patch_fallback u1=" << u1 << " u2=" << u2 << "\n";
      sol = op.solve_least_squares(gm.residuals.col(col), g1.residuals.col(col),
                                   g2.residuals.col(col));
      ++failed;
    }
    if (sol.projected) ++projected;
    if (!sol.converged) ++not_converged;
    auto [x1, x2] = sep::reconstruct_patches(sol, dict, include_v);
    if (add_dc) {
      int u1 = static_cast<int>(col) / gm.grid_w;
      int u2 = static_cast<int>(col) % gm.grid_w;
      auto [d1, d2] = dc_split(gm.dc(u1, u2), g1.dc(u1, u2), g2.dc(u1, u2));
      x1.array() += d1;
      x2.array() += d2;
    }
    p1.col(col) = x1;
    p2.col(col) = x2;
  });

  if (stats) {
    stats->patches += total;
    stats->projected += projected.load();
    stats->not_converged += not_converged.load();
    stats->failed += failed.load();
  }
  return {overlap_add(p1, spec, m.rows(), m.cols()), overlap_add(p2, spec, m.rows(), m.cols())};
}

}  // namespace

std::pair<ImagePlane, ImagePlane> separate_single_scale(
    const ImagePlane& m, const ImagePlane& y1, const ImagePlane& y2,
    const dl::DictionaryTriple& dict, const PatchGridSpec& spec,
    const sep::BPConfig& cfg, bool include_v, int threads, SeparationStats* stats) {
  return separate_core(m, y1, y2, dict, spec, cfg, include_v, true, threads, stats);
}

std::pair<ImagePlane, ImagePlane> separate_textures(
    const ImagePlane& m, const ImagePlane& y1, const ImagePlane& y2,
    const dl::DictionaryTriple& dict, const PatchGridSpec& spec,
    const sep::BPConfig& cfg, bool include_v, int threads, SeparationStats* stats) {
  return separate_core(m, y1, y2, dict, spec, cfg, include_v, false, threads, stats);
}

}  // namespace patchwork
}  // namespace xsep
