#include "xsep/metrics.hpp"

#include <cmath>
#include <limits>

namespace xsep {
namespace metrics {

double psnr(const ImagePlane& ref, const ImagePlane& test, double peak) {
  if (ref.rows() != test.rows() || ref.cols() != test.cols())
    throw ArgumentError("psnr: dimension mismatch");
  if (peak <= 0) throw ArgumentError("psnr: peak must be positive");
  double mse = (ref - test).squaredNorm() / static_cast<double>(ref.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const ImagePlane& ref, const ImagePlane& test) {
  constexpr int kWindow = 11;
  constexpr double kSigma = 1.5;
  constexpr double kL = 255.0;
  constexpr double kC1 = (0.01 * kL) * (0.01 * kL);
  constexpr double kC2 = (0.03 * kL) * (0.03 * kL);

  if (ref.rows() != test.rows() || ref.cols() != test.cols())
    throw ArgumentError("ssim: dimension mismatch");
  if (ref.rows() < kWindow || ref.cols() < kWindow)
    throw ArgumentError("ssim: image smaller than the 11x11 window");

  Eigen::VectorXd kernel(kWindow);
  for (int i = 0; i < kWindow; ++i) {
    double x = i - (kWindow - 1) / 2.0;
    kernel(i) = std::exp(-x * x / (2.0 * kSigma * kSigma));
  }
  kernel /= kernel.sum();
  Eigen::MatrixXd window = kernel * kernel.transpose();

  const Eigen::Index out_h = ref.rows() - kWindow + 1;
  const Eigen::Index out_w = ref.cols() - kWindow + 1;
  double acc = 0.0;
  for (Eigen::Index r = 0; r < out_h; ++r)
    for (Eigen::Index c = 0; c < out_w; ++c) {
      auto a = ref.block(r, c, kWindow, kWindow).array();
      auto b = test.block(r, c, kWindow, kWindow).array();
      auto w = window.array();
      double mu1 = (w * a).sum();
      double mu2 = (w * b).sum();
      double var1 = (w * a * a).sum() - mu1 * mu1;
      double var2 = (w * b * b).sum() - mu2 * mu2;
      double cov = (w * a * b).sum() - mu1 * mu2;
      acc += ((2.0 * mu1 * mu2 + kC1) * (2.0 * cov + kC2)) /
             ((mu1 * mu1 + mu2 * mu2 + kC1) * (var1 + var2 + kC2));
    }
  return acc / static_cast<double>(out_h * out_w);
}

}  // namespace metrics
}  // namespace xsep
