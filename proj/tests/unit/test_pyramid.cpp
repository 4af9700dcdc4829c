#include <random>

#include "doctest.h"
#include "xsep/pyramid.hpp"

using namespace xsep;

namespace {

ImagePlane random_image(Eigen::Index h, Eigen::Index w, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 255.0);
  ImagePlane img(h, w);
  for (Eigen::Index i = 0; i < h; ++i)
    for (Eigen::Index j = 0; j < w; ++j) img(i, j) = u(rng);
  return img;
}

}  // namespace

TEST_CASE("decompose/reconstruct is exact for the production geometry") {
  // patch side 8 with steps (4, 4, 7, 8): a 1024x1024 image cascades through
  // 256^2, 64^2, 9^2 and 1^2 low bands
  pyramid::PyramidSpec spec;
  spec.scales = {{8, 4}, {8, 4}, {8, 7}, {8, 8}};
  ImagePlane img = random_image(1024, 1024, 1);
  pyramid::Pyramid p = pyramid::decompose(img, spec);
  REQUIRE(p.low.size() == 5);
  REQUIRE(p.high.size() == 4);
  CHECK(p.low[1].rows() == 256);
  CHECK(p.low[2].rows() == 64);
  CHECK(p.low[3].rows() == 9);
  CHECK(p.low[4].rows() == 1);
  ImagePlane back = pyramid::reconstruct(p, spec);
  REQUIRE(back.rows() == 1024);
  CHECK((back - img).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("decompose/reconstruct is exact for small irregular sizes") {
  for (auto [h, w] : {std::pair<int, int>{64, 64}, {100, 72}, {57, 91}}) {
    pyramid::PyramidSpec spec;
    spec.scales = {{8, 4}, {4, 4}};
    ImagePlane img = random_image(h, w, 100 + h + w);
    pyramid::Pyramid p = pyramid::decompose(img, spec);
    ImagePlane back = pyramid::reconstruct(p, spec);
    REQUIRE(back.rows() == h);
    REQUIRE(back.cols() == w);
    CHECK((back - img).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("high bands satisfy the defining identity") {
  pyramid::PyramidSpec spec;
  spec.scales = {{8, 4}, {4, 2}};
  ImagePlane img = random_image(48, 40, 7);
  pyramid::Pyramid p = pyramid::decompose(img, spec);
  CHECK((p.low[0] - img).cwiseAbs().maxCoeff() == 0.0);
  for (size_t l = 0; l < spec.levels(); ++l) {
    ImagePlane up = pyramid::upsample(p.low[l + 1], p.low[l].rows(), p.low[l].cols(),
                                      spec.scales[l]);
    CHECK((p.high[l] - (p.low[l] - up)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("a constant image produces zero high bands") {
  pyramid::PyramidSpec spec;
  spec.scales = {{8, 4}, {4, 4}};
  pyramid::Pyramid p = pyramid::decompose(ImagePlane::Constant(64, 64, 42.0), spec);
  for (const ImagePlane& h : p.high) CHECK(h.isZero(1e-12));
  CHECK((p.low.back().array() - 42.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("decomposition is linear") {
  pyramid::PyramidSpec spec;
  spec.scales = {{8, 4}, {4, 2}};
  ImagePlane a = random_image(40, 32, 8);
  ImagePlane b = random_image(40, 32, 9);
  pyramid::Pyramid pa = pyramid::decompose(a, spec);
  pyramid::Pyramid pb = pyramid::decompose(b, spec);
  pyramid::Pyramid pc = pyramid::decompose(2.0 * a + b, spec);
  for (size_t l = 0; l < pa.high.size(); ++l)
    CHECK((pc.high[l] - (2.0 * pa.high[l] + pb.high[l])).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((pc.low.back() - (2.0 * pa.low.back() + pb.low.back())).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("upsample of a constant grid is constant") {
  patchwork::PatchGridSpec spec{8, 4};
  ImagePlane up = pyramid::upsample(ImagePlane::Constant(5, 7, 3.25), 20, 28, spec);
  REQUIRE(up.rows() == 20);
  REQUIRE(up.cols() == 28);
  CHECK((up.array() - 3.25).abs().maxCoeff() < 1e-12);
}

TEST_CASE("upsample interpolates linear ramps exactly between anchors") {
  // grid value = u1 -> the upsampled plane must be linear in the row
  // coordinate between the first and last patch centers
  patchwork::PatchGridSpec spec{4, 2};
  ImagePlane grid(3, 3);
  for (int u1 = 0; u1 < 3; ++u1)
    for (int u2 = 0; u2 < 3; ++u2) grid(u1, u2) = static_cast<double>(u1);
  ImagePlane up = pyramid::upsample(grid, 8, 8, spec);
  // anchors at rows step*u1 + (side-1)/2 = 2*u1 + 1.5
  for (int u1 = 0; u1 < 3; ++u1) {
    double anchor = 2.0 * u1 + 1.5;
    int lo = static_cast<int>(anchor - 0.5), hi = static_cast<int>(anchor + 0.5);
    double interp = 0.5 * (up(lo, 4) + up(hi, 4));
    CHECK(interp == doctest::Approx(static_cast<double>(u1)).epsilon(1e-9));
  }
  // rows beyond the last anchor clamp to the edge value
  CHECK(up(7, 4) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(up(0, 4) == doctest::Approx(0.0).epsilon(1e-9));
}
