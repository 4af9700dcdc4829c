#include "xsep/pyramid.hpp"

#include <cmath>

namespace xsep {
namespace pyramid {

ImagePlane upsample(const ImagePlane& grid, Eigen::Index height, Eigen::Index width,
                    const patchwork::PatchGridSpec& spec) {
  if (grid.rows() < 1 || grid.cols() < 1) throw ArgumentError("upsample: empty grid");
  const double offset = 0.5 * (spec.patch_side - 1);  // patch center of origin 0
  const double step = spec.step;

  auto axis_coord = [&](Eigen::Index pixel, Eigen::Index count) {
    double g = (static_cast<double>(pixel) - offset) / step;
    // constant extrapolation outside the outermost patch centers
    if (g < 0.0) g = 0.0;
    double hi = static_cast<double>(count - 1);
    if (g > hi) g = hi;
    return g;
  };

  ImagePlane out(height, width);
  for (Eigen::Index r = 0; r < height; ++r) {
    double gr = axis_coord(r, grid.rows());
    Eigen::Index r0 = static_cast<Eigen::Index>(std::floor(gr));
    Eigen::Index r1 = std::min(r0 + 1, grid.rows() - 1);
    double fr = gr - static_cast<double>(r0);
    for (Eigen::Index c = 0; c < width; ++c) {
      double gc = axis_coord(c, grid.cols());
      Eigen::Index c0 = static_cast<Eigen::Index>(std::floor(gc));
      Eigen::Index c1 = std::min(c0 + 1, grid.cols() - 1);
      double fc = gc - static_cast<double>(c0);
      out(r, c) = (1.0 - fr) * ((1.0 - fc) * grid(r0, c0) + fc * grid(r0, c1)) +
                  fr * ((1.0 - fc) * grid(r1, c0) + fc * grid(r1, c1));
    }
  }
  return out;
}

Pyramid decompose(const ImagePlane& img, const PyramidSpec& spec) {
  if (spec.levels() < 1) throw ArgumentError("pyramid: need at least one scale");
  Pyramid p;
  p.low.push_back(img);
  for (std::size_t l = 0; l < spec.levels(); ++l) {
    // note: push_back may reallocate p.low, so finish using the current plane
    // before appending the next one
    const ImagePlane cur = p.low.back();
    if (cur.rows() < spec.scales[l].patch_side || cur.cols() < spec.scales[l].patch_side)
      throw ArgumentError("pyramid: scale " + std::to_string(l + 1) +
                          " degenerates below one patch");
    patchwork::PatchGrid grid = patchwork::extract_grid(cur, spec.scales[l]);
    p.high.push_back(cur - upsample(grid.dc, cur.rows(), cur.cols(), spec.scales[l]));
    p.low.push_back(std::move(grid.dc));
  }
  return p;
}

ImagePlane reconstruct(const Pyramid& p, const PyramidSpec& spec) {
  if (p.low.size() != spec.levels() + 1 || p.high.size() != spec.levels())
    throw ArgumentError("pyramid: plane count does not match the spec");
  ImagePlane cur = p.low.back();
  for (std::size_t l = spec.levels(); l-- > 0;) {
    const ImagePlane& high = p.high[l];
    cur = high + upsample(cur, high.rows(), high.cols(), spec.scales[l]);
  }
  return cur;
}

std::pair<ImagePlane, ImagePlane> separate_multiscale(
    const ImagePlane& m, const ImagePlane& y1, const ImagePlane& y2,
    const PyramidSpec& spec, const std::vector<dl::DictionaryTriple>& dicts,
    const sep::BPConfig& cfg, bool include_v, int threads,
    patchwork::SeparationStats* stats) {
  if (dicts.empty()) throw ArgumentError("separate_multiscale: no dictionaries");
  Pyramid pm = decompose(m, spec);
  Pyramid p1 = decompose(y1, spec);
  Pyramid p2 = decompose(y2, spec);

  const std::size_t levels = spec.levels();
  std::vector<ImagePlane> t1(levels), t2(levels);
  for (std::size_t l = 0; l < levels; ++l) {
    // deepest trained triple serves any scale beyond the trained range
    const dl::DictionaryTriple& dict = dicts[std::min(l, dicts.size() - 1)];
    std::tie(t1[l], t2[l]) = patchwork::separate_textures(
        pm.low[l], p1.low[l], p2.low[l], dict, spec.scales[l], cfg, include_v, threads, stats);
  }

  // coarsest plane: pixelwise DC split by the visual ratio
  const ImagePlane& coarse_m = pm.low[levels];
  ImagePlane s1(coarse_m.rows(), coarse_m.cols());
  ImagePlane s2(coarse_m.rows(), coarse_m.cols());
  for (Eigen::Index r = 0; r < coarse_m.rows(); ++r)
    for (Eigen::Index c = 0; c < coarse_m.cols(); ++c) {
      auto [d1, d2] =
          patchwork::dc_split(coarse_m(r, c), p1.low[levels](r, c), p2.low[levels](r, c));
      s1(r, c) = d1;
      s2(r, c) = d2;
    }

  for (std::size_t l = levels; l-- > 0;) {
    s1 = t1[l] + upsample(s1, t1[l].rows(), t1[l].cols(), spec.scales[l]);
    s2 = t2[l] + upsample(s2, t2[l].rows(), t2[l].cols(), spec.scales[l]);
  }
  return {s1, s2};
}

}  // namespace pyramid
}  // namespace xsep
