#pragma once

#include <vector>

#include "sid/image.hpp"

namespace sid {

using FeatureVector = std::vector<double>;

/// Layout:
///   [0, 16)  per direction (0, 45, 90, 135 deg): contrast, homogeneity,
///            energy, correlation of a 32-level symmetric GLCM
///   16       variance of the 4-neighbour Laplacian over interior pixels
///   17       8x8 blockiness: mean |luma step| across grid lines minus the
///            mean step elsewhere
///   18, 19   luma mean and standard deviation
inline constexpr int kFeatureDim = 20;

FeatureVector extract_features(const Patch& patch);
FeatureVector extract_features(const GrayImage& gray);

double laplacian_variance(const GrayImage& gray);
double blockiness(const GrayImage& gray);

}  // namespace sid
