#pragma once

#include <Eigen/Core>

#include "xsep/separator.hpp"
#include "xsep/storage.hpp"

namespace xsep {
namespace patchwork {

struct PatchGridSpec {
  int patch_side = 8;  // sqrt(n)
  int step = 4;        // overlap step, 1 <= step <= patch_side
};

// Grid of floor(H/step) x floor(W/step) patch origins (step*u1, step*u2).
// Border patches read from an edge-replicated padding of the image. Each
// patch is stored DC-removed; the DC map keeps the means.
struct PatchGrid {
  int grid_h = 0;
  int grid_w = 0;
  Eigen::MatrixXd dc;         // grid_h x grid_w patch means
  Eigen::MatrixXd residuals;  // n x (grid_h*grid_w), column = patch at (u1,u2), u2-major? see index()

  Eigen::Index index(int u1, int u2) const {
    return static_cast<Eigen::Index>(u1) * grid_w + u2;
  }
};

PatchGrid extract_grid(const ImagePlane& img, const PatchGridSpec& spec);

// Averages co-located pixels of all covering patches; padding area discarded.
ImagePlane overlap_add(const Eigen::MatrixXd& patches, const PatchGridSpec& spec,
                       Eigen::Index height, Eigen::Index width);

// Splits a mixture DC proportionally to the (clamped nonnegative) visual DCs.
// Conserves mass exactly: d1 + d2 == m_dc.
std::pair<double, double> dc_split(double m_dc, double y1_dc, double y2_dc);

struct SeparationStats {
  long patches = 0;
  long projected = 0;
  long not_converged = 0;
  long failed = 0;  // least-squares fallback used
};

std::pair<ImagePlane, ImagePlane> separate_single_scale(
    const ImagePlane& m, const ImagePlane& y1, const ImagePlane& y2,
    const dl::DictionaryTriple& dict, const PatchGridSpec& spec,
    const sep::BPConfig& cfg, bool include_v, int threads = 0,
    SeparationStats* stats = nullptr);

// Same patch pipeline without the DC re-add: overlap-added reconstructions of
// the DC-removed patches only. Used per scale by the pyramid separation.
std::pair<ImagePlane, ImagePlane> separate_textures(
    const ImagePlane& m, const ImagePlane& y1, const ImagePlane& y2,
    const dl::DictionaryTriple& dict, const PatchGridSpec& spec,
    const sep::BPConfig& cfg, bool include_v, int threads = 0,
    SeparationStats* stats = nullptr);

}  // namespace patchwork
}  // namespace xsep
