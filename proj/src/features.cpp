#include "sid/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "sid/errors.hpp"
#include "sid/glcm.hpp"
#include "sid/imageops.hpp"

namespace sid {

double laplacian_variance(const GrayImage& g) {
  if (g.width() < 3 || g.height() < 3) return 0.0;
  double sum = 0.0, sum_sq = 0.0;
  std::size_t n = 0;
  for (int y = 1; y + 1 < g.height(); ++y) {
    for (int x = 1; x + 1 < g.width(); ++x) {
      const double v = static_cast<double>(g.at(x - 1, y)) + g.at(x + 1, y) + g.at(x, y - 1) +
                       g.at(x, y + 1) - 4.0 * g.at(x, y);
      sum += v;
      sum_sq += v * v;
      ++n;
    }
  }
  const double mean = sum / static_cast<double>(n);
  return std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean);
}

double blockiness(const GrayImage& g) {
  double on_sum = 0.0, off_sum = 0.0;
  std::size_t on_n = 0, off_n = 0;
  auto add = [&](int boundary_coord, int a, int b) {
    const double step = std::abs(a - b);
    if (boundary_coord % 8 == 0) {
      on_sum += step;
      ++on_n;
    } else {
      off_sum += step;
      ++off_n;
    }
  };
  for (int y = 0; y < g.height(); ++y) {
    for (int x = 1; x < g.width(); ++x) add(x, g.at(x, y), g.at(x - 1, y));
  }
  for (int y = 1; y < g.height(); ++y) {
    for (int x = 0; x < g.width(); ++x) add(y, g.at(x, y), g.at(x, y - 1));
  }
  if (on_n == 0 || off_n == 0) return 0.0;
  return on_sum / static_cast<double>(on_n) - off_sum / static_cast<double>(off_n);
}

FeatureVector extract_features(const GrayImage& gray) {
  if (gray.width() < 8 || gray.height() < 8) {
    fail(ErrorKind::kParameter, "feature extraction needs a patch side of at least 8");
  }
  FeatureVector f;
  f.reserve(kFeatureDim);
  for (const Offset& o : default_glcm_offsets()) {
    const GlcmMatrix m = compute_glcm(gray, kDefaultGlcmLevels, {o}, true);
    f.push_back(glcm_contrast(m));
    f.push_back(glcm_homogeneity(m));
    f.push_back(glcm_energy(m));
    f.push_back(glcm_correlation(m));
  }
  f.push_back(laplacian_variance(gray));
  f.push_back(blockiness(gray));

  double sum = 0.0, sum_sq = 0.0;
  for (auto v : gray.data()) {
    sum += v;
    sum_sq += static_cast<double>(v) * v;
  }
  const double n = static_cast<double>(gray.data().size());
  const double mean = sum / n;
  f.push_back(mean);
  f.push_back(std::sqrt(std::max(0.0, sum_sq / n - mean * mean)));
  return f;
}

FeatureVector extract_features(const Patch& patch) {
  return extract_features(to_grayscale(patch.pixels));
}

}  // namespace sid
