#pragma once

#include <vector>

#include "xsep/patchwork.hpp"

namespace xsep {
namespace pyramid {

// Per-scale patch geometry, finest first. The scale-l low band has resolution
// floor(H_l/step_l) x floor(W_l/step_l) and becomes the input of scale l+1.
struct PyramidSpec {
  std::vector<patchwork::PatchGridSpec> scales;

  std::size_t levels() const { return scales.size(); }
};

// low[0] is the original image, low[L] the coarsest DC plane;
// high[l] = low[l] - upsample(low[l+1]), so reconstruction is exact.
struct Pyramid {
  std::vector<ImagePlane> low;   // L+1 planes
  std::vector<ImagePlane> high;  // L planes
};

// Bilinear interpolation of a DC grid back to height x width, grid samples
// anchored at patch centers (step*u + (patch_side-1)/2).
ImagePlane upsample(const ImagePlane& grid, Eigen::Index height, Eigen::Index width,
                    const patchwork::PatchGridSpec& spec);

Pyramid decompose(const ImagePlane& img, const PyramidSpec& spec);

ImagePlane reconstruct(const Pyramid& p, const PyramidSpec& spec);

// Coarse-to-fine separation: per-scale patchwise basis pursuit on the low
// bands yields DC-free texture planes; the coarsest plane is split pixelwise
// by the visual DC ratio; descending re-adds upsampled coarser content.
// Scales beyond the trained dictionaries reuse the deepest triple.
std::pair<ImagePlane, ImagePlane> separate_multiscale(
    const ImagePlane& m, const ImagePlane& y1, const ImagePlane& y2,
    const PyramidSpec& spec, const std::vector<dl::DictionaryTriple>& dicts,
    const sep::BPConfig& cfg, bool include_v, int threads = 0,
    patchwork::SeparationStats* stats = nullptr);

}  // namespace pyramid
}  // namespace xsep
