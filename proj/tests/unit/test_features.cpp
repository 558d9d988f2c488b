#include <cmath>

#include "doctest.h"
#include "sid/alterations.hpp"
#include "sid/errors.hpp"
#include "sid/features.hpp"
#include "sid/imageops.hpp"
#include "test_support.hpp"

using namespace sid;

TEST_CASE("constant patch has zero variation features") {
  Patch p;
  p.pixels = testing::constant_image(32, 32, 100, 100, 100);
  const FeatureVector f = extract_features(p);
  REQUIRE(f.size() == static_cast<std::size_t>(kFeatureDim));
  for (int dir = 0; dir < 4; ++dir) CHECK(f[dir * 4] == 0.0);
  CHECK(f[16] == 0.0);
  CHECK(f[17] == 0.0);
  CHECK(f[18] == doctest::Approx(100.0));
  CHECK(f[19] == 0.0);
}

TEST_CASE("noise has larger Laplacian variance than its blurred copy") {
  CounterRng rng(3, 3);
  const ImageBuffer noise = testing::random_image(rng, 48, 48);
  const auto spec = AlterationSpec::with_defaults(AlterationKind::kGaussianBlur);
  const ImageBuffer blurred = apply_alteration(noise, spec, {{"sigma", 2.0}});
  CHECK(laplacian_variance(to_grayscale(noise)) > laplacian_variance(to_grayscale(blurred)));
}

TEST_CASE("8x8 block structure raises blockiness") {
  CounterRng rng(4, 4);
  GrayImage blocks(64, 64), smooth(64, 64);
  for (int by = 0; by < 8; ++by) {
    for (int bx = 0; bx < 8; ++bx) {
      const auto v = static_cast<std::uint8_t>(rng.below(256));
      for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) blocks.at(bx * 8 + x, by * 8 + y) = v;
      }
    }
  }
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) smooth.at(x, y) = static_cast<std::uint8_t>(2 * x + y);
  }
  CHECK(blockiness(blocks) > 10.0);
  CHECK(std::abs(blockiness(smooth)) < 1e-9);
}

TEST_CASE("features are finite on random patches and reject tiny ones") {
  CounterRng rng(6, 6);
  for (int i = 0; i < 10; ++i) {
    Patch p;
    p.pixels = testing::random_image(rng, 16 + i, 16 + i);
    for (double v : extract_features(p)) CHECK(std::isfinite(v));
  }
  Patch tiny;
  tiny.pixels = testing::constant_image(7, 7, 0, 0, 0);
  CHECK_THROWS_AS(extract_features(tiny), Error);
}
