#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sid/image.hpp"

namespace sid {

enum class AlterationKind {
  kJpegCompress,
  kGaussianBlur,
  kAdvancedBlur,
  kBrightnessContrast,
  kGamma,
  kHorizontalFlip,
};

std::string_view alteration_name(AlterationKind kind);
std::optional<AlterationKind> parse_alteration(std::string_view name);

struct ParamRange {
  double lo = 0.0;
  double hi = 0.0;
  friend bool operator==(const ParamRange&, const ParamRange&) = default;
};

using ParamRanges = std::map<std::string, ParamRange>;
using ParamValues = std::map<std::string, double>;

/// Parameter names of a kind with their admissible bounds. Spec ranges must
/// lie inside these bounds; an empty map means the kind takes no parameters.
///   JpegCompress        quality in [40, 100]
///   GaussianBlur        sigma in [0.2, 3.0]
///   AdvancedBlur        beta in [0.5, 8.0], sigma in [0.2, 1.0], noise in [0.75, 1.25]
///   BrightnessContrast  brightness, contrast in [-0.2, 0.2]
///   Gamma               gamma in [0.8, 1.2]
const ParamRanges& alteration_bounds(AlterationKind kind);

struct AlterationSpec {
  AlterationKind kind = AlterationKind::kHorizontalFlip;
  ParamRanges ranges;
  double probability = 1.0;

  /// Full-range spec for a kind.
  static AlterationSpec with_defaults(AlterationKind kind, double probability = 1.0);
  /// Collapsed ranges: every parameter fixed at the given value.
  static AlterationSpec fixed(AlterationKind kind, const ParamValues& values,
                              double probability = 1.0);

  /// Throws a parameter error when ranges are missing, inverted or out of
  /// bounds, or the probability is outside [0, 1].
  void validate() const;
};

struct AugmentationPolicy {
  std::vector<AlterationSpec> steps;
  std::uint64_t seed = 0;
};

/// One alteration as actually executed, with its concrete parameters.
/// AdvancedBlur also carries "noise_seed", which keys the kernel noise field.
struct AppliedAlteration {
  AlterationKind kind = AlterationKind::kHorizontalFlip;
  ParamValues params;
  std::size_t step_index = 0;
  friend bool operator==(const AppliedAlteration&, const AppliedAlteration&) = default;
};

/// Applies one alteration with concrete parameters; throws a parameter error
/// when a value lies outside the spec's ranges.
ImageBuffer apply_alteration(const ImageBuffer& img, const AlterationSpec& spec,
                             const ParamValues& params);

/// Draws activations and parameters for every step without touching pixels.
/// Step i uses the stream keyed by (seed, image_index, i).
std::vector<AppliedAlteration> sample_plan(const AugmentationPolicy& policy,
                                           std::uint64_t image_index);

struct AugmentResult {
  ImageBuffer image;
  std::vector<AppliedAlteration> applied;
};

AugmentResult augment(const ImageBuffer& img, const AugmentationPolicy& policy,
                      std::uint64_t image_index);

/// Flip at 0.5, then JpegCompress, GaussianBlur, AdvancedBlur,
/// BrightnessContrast and Gamma at 0.2 each with full default ranges.
AugmentationPolicy susy_policy(std::uint64_t seed = 0);

/// Flip-only policy (probability 0.5) used for the single-class protocol.
AugmentationPolicy flip_policy(std::uint64_t seed = 0);

// Kernels exposed for tests.

/// Normalized 1-D Gaussian, radius ceil(3 sigma).
std::vector<double> gaussian_kernel(double sigma);

/// Normalized (2r+1)^2 generalized-Gaussian kernel exp(-(d/sigma)^beta) with
/// radius r = ceil(3 sigma), each cell scaled by a uniform factor drawn from
/// [noise_lo, noise_hi] on the stream keyed by noise_seed, then renormalized.
std::vector<double> advanced_blur_kernel(double beta, double sigma, double noise_lo,
                                         double noise_hi, std::uint64_t noise_seed);

/// Peak signal-to-noise ratio in dB over all channels; infinity when equal.
double psnr(const ImageBuffer& a, const ImageBuffer& b);

}  // namespace sid
