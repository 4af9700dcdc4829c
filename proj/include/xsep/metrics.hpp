#pragma once

#include "xsep/storage.hpp"

namespace xsep {
namespace metrics {

// 10 log10(peak^2 / MSE); identical images give +infinity.
double psnr(const ImagePlane& ref, const ImagePlane& test, double peak = 255.0);

// Mean local SSIM, 11x11 Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03,
// L = 255. Windows are evaluated where they fit entirely inside the image.
double ssim(const ImagePlane& ref, const ImagePlane& test);

}  // namespace metrics
}  // namespace xsep
