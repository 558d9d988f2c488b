#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "sid/alterations.hpp"
#include "sid/codec.hpp"
#include "sid/errors.hpp"
#include "sid/imageops.hpp"
#include "test_support.hpp"

using namespace sid;
using testing::constant_image;
using testing::fixture_path;

namespace {

std::pair<int, int> value_range(const ImageBuffer& img) {
  const auto [lo, hi] = std::minmax_element(img.data().begin(), img.data().end());
  return {*lo, *hi};
}

}  // namespace

TEST_CASE("identity parameters leave images byte-identical") {
  const ImageBuffer img = read_image(fixture_path("natural.png"));
  const auto gamma = AlterationSpec::fixed(AlterationKind::kGamma, {{"gamma", 1.0}});
  CHECK(apply_alteration(img, gamma, {{"gamma", 1.0}}) == img);
  const auto bc = AlterationSpec::fixed(AlterationKind::kBrightnessContrast, {{"brightness", 0.0}, {"contrast", 0.0}});
  CHECK(apply_alteration(img, bc, {{"brightness", 0.0}, {"contrast", 0.0}}) == img);
  const auto flip = AlterationSpec::with_defaults(AlterationKind::kHorizontalFlip);
  CHECK(apply_alteration(apply_alteration(img, flip, {}), flip, {}) == img);
  CHECK(apply_alteration(img, flip, {}) != img);
}

TEST_CASE("gamma and brightness/contrast follow their closed forms") {
  const ImageBuffer img = constant_image(3, 3, 128, 0, 255);
  const auto g = AlterationSpec::fixed(AlterationKind::kGamma, {{"gamma", 1.2}});
  const ImageBuffer out = apply_alteration(img, g, {{"gamma", 1.2}});
  CHECK(int(out.at(1, 1, 0)) == int(std::floor(255.0 * std::pow(128.0 / 255.0, 1.2) + 0.5)));
  CHECK(int(out.at(1, 1, 1)) == 0);
  CHECK(int(out.at(1, 1, 2)) == 255);

  const auto bc = AlterationSpec::fixed(AlterationKind::kBrightnessContrast, {{"brightness", 0.1}, {"contrast", -0.2}});
  const ImageBuffer o2 = apply_alteration(img, bc, {{"brightness", 0.1}, {"contrast", -0.2}});
  const double unit = (128.0 / 255.0 - 0.5) * 0.8 + 0.5 + 0.1;
  CHECK(int(o2.at(0, 0, 0)) == int(std::floor(unit * 255.0 + 0.5)));
  CHECK(int(o2.at(0, 0, 2)) == 255);  // clamped
}

TEST_CASE("out-of-range parameters are rejected") {
  // Gamma 2.0 lies outside the admissible [0.8, 1.2] range.
  CHECK_THROWS_AS(AlterationSpec::fixed(AlterationKind::kGamma, {{"gamma", 2.0}}), Error);
  const auto g = AlterationSpec::with_defaults(AlterationKind::kGamma);
  CHECK_THROWS_AS(apply_alteration(constant_image(2, 2, 1, 1, 1), g, {{"gamma", 1.5}}), Error);
  CHECK_THROWS_AS(apply_alteration(constant_image(2, 2, 1, 1, 1), g, {}), Error);
  AlterationSpec bad = AlterationSpec::with_defaults(AlterationKind::kJpegCompress);
  bad.probability = 1.5;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = AlterationSpec::with_defaults(AlterationKind::kJpegCompress);
  bad.ranges["quality"] = {90, 80};
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("blur kernels are normalized and blurs preserve constants") {
  for (double sigma : {0.2, 0.7, 1.5, 3.0}) {
    const auto k = gaussian_kernel(sigma);
    CHECK(k.size() == 2 * static_cast<std::size_t>(std::ceil(3 * sigma)) + 1);
    CHECK(std::accumulate(k.begin(), k.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
  }
  const auto ak = advanced_blur_kernel(2.0, 0.8, 0.75, 1.25, 99);
  CHECK(std::accumulate(ak.begin(), ak.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(ak == advanced_blur_kernel(2.0, 0.8, 0.75, 1.25, 99));

  const ImageBuffer flat = constant_image(20, 15, 37, 200, 5);
  const auto gb = AlterationSpec::with_defaults(AlterationKind::kGaussianBlur);
  CHECK(apply_alteration(flat, gb, {{"sigma", 2.5}}) == flat);
  const auto ab = AlterationSpec::with_defaults(AlterationKind::kAdvancedBlur);
  CHECK(apply_alteration(flat, ab, {{"beta", 3.0}, {"sigma", 0.9}, {"noise_seed", 4.0}}) == flat);
}

TEST_CASE("blurring never widens the value range and keeps dimensions") {
  const ImageBuffer img = read_image(fixture_path("natural.png"));
  const auto [lo, hi] = value_range(img);
  const auto gb = AlterationSpec::with_defaults(AlterationKind::kGaussianBlur);
  const ImageBuffer b = apply_alteration(img, gb, {{"sigma", 1.3}});
  const auto [blo, bhi] = value_range(b);
  CHECK(blo >= lo);
  CHECK(bhi <= hi);
  CHECK(b.width() == img.width());
  const auto jpeg = AlterationSpec::with_defaults(AlterationKind::kJpegCompress);
  const ImageBuffer j = apply_alteration(img, jpeg, {{"quality", 40}});
  CHECK(j.width() == img.width());
  CHECK(j.height() == img.height());
}

TEST_CASE("augment is a pure function of (image, policy, index)") {
  const ImageBuffer img = read_image(fixture_path("natural.png"));
  AugmentationPolicy policy = susy_policy(1234);
  for (auto& s : policy.steps) s.probability = 1.0;
  const AugmentResult a = augment(img, policy, 17);
  const AugmentResult b = augment(img, policy, 17);
  CHECK(a.image == b.image);
  CHECK(a.applied == b.applied);
  CHECK(a.applied.size() == policy.steps.size());
  const AugmentResult c = augment(img, policy, 18);
  CHECK(c.applied != a.applied);
  for (const auto& step : a.applied) {
    for (const auto& [name, value] : step.params) {
      if (name == "noise_seed") continue;
      const auto& r = policy.steps[step.step_index].ranges.at(name);
      CHECK(value >= r.lo);
      CHECK(value <= r.hi);
    }
  }
}

TEST_CASE("zero probabilities give the identity and collapsed ranges fix the output") {
  const ImageBuffer img = read_image(fixture_path("natural.png"));
  AugmentationPolicy off = susy_policy(5);
  for (auto& s : off.steps) s.probability = 0.0;
  const AugmentResult r = augment(img, off, 3);
  CHECK(r.image == img);
  CHECK(r.applied.empty());

  AugmentationPolicy fixed;
  fixed.seed = 1;
  fixed.steps = {AlterationSpec::fixed(AlterationKind::kGamma, {{"gamma", 0.9}}),
                 AlterationSpec::fixed(AlterationKind::kGaussianBlur, {{"sigma", 1.0}}),
                 AlterationSpec::with_defaults(AlterationKind::kHorizontalFlip)};
  const AugmentResult f1 = augment(img, fixed, 0);
  fixed.seed = 999;
  const AugmentResult f2 = augment(img, fixed, 42);
  CHECK(f1.image == f2.image);
  REQUIRE(f1.applied.size() == 3);
  CHECK(f1.applied[0].params.at("gamma") == 0.9);
}

TEST_CASE("susy policy probabilities and expected applied count") {
  const AugmentationPolicy p = susy_policy();
  REQUIRE(p.steps.size() == 6);
  CHECK(p.steps[0].kind == AlterationKind::kHorizontalFlip);
  CHECK(p.steps[0].probability == 0.5);
  const AlterationKind order[] = {AlterationKind::kJpegCompress, AlterationKind::kGaussianBlur,
                                  AlterationKind::kAdvancedBlur, AlterationKind::kBrightnessContrast,
                                  AlterationKind::kGamma};
  for (int i = 0; i < 5; ++i) {
    CHECK(p.steps[i + 1].kind == order[i]);
    CHECK(p.steps[i + 1].probability == 0.2);
  }
  const int draws = 20000;
  std::size_t non_flip = 0, flips = 0;
  for (int i = 0; i < draws; ++i) {
    for (const auto& step : sample_plan(p, static_cast<std::uint64_t>(i))) {
      (step.kind == AlterationKind::kHorizontalFlip ? flips : non_flip) += 1;
    }
  }
  CHECK(static_cast<double>(non_flip) / draws == doctest::Approx(1.0).epsilon(0.05));
  CHECK(static_cast<double>(flips) / draws == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("alteration names round-trip") {
  for (auto k : {AlterationKind::kJpegCompress, AlterationKind::kGaussianBlur, AlterationKind::kAdvancedBlur,
                 AlterationKind::kBrightnessContrast, AlterationKind::kGamma, AlterationKind::kHorizontalFlip}) {
    CHECK(parse_alteration(alteration_name(k)) == k);
  }
  CHECK_FALSE(parse_alteration("Sharpen").has_value());
}

TEST_CASE("psnr of identical images is infinite") {
  const ImageBuffer img = constant_image(4, 4, 9, 9, 9);
  CHECK(std::isinf(psnr(img, img)));
}
