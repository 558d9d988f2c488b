#pragma once

#include <cstdint>
#include <vector>

#include "sid/image.hpp"

namespace sid {

struct Offset {
  int dx = 0;
  int dy = 0;
  friend bool operator==(const Offset&, const Offset&) = default;
};

/// Distance-1 displacements at 0, 45, 90 and 135 degrees (image y grows down).
std::vector<Offset> default_glcm_offsets();

inline constexpr int kDefaultGlcmLevels = 32;

struct GlcmParams {
  int levels = kDefaultGlcmLevels;
  std::vector<Offset> offsets = default_glcm_offsets();
  bool symmetric = true;
};

/// Normalized grey-level co-occurrence matrix. Raw pair counts are kept next
/// to the probabilities so callers can check them exactly.
class GlcmMatrix {
 public:
  GlcmMatrix(int levels, std::vector<Offset> offsets, bool symmetric,
             std::vector<std::uint64_t> counts);

  int levels() const noexcept { return levels_; }
  const std::vector<Offset>& offsets() const noexcept { return offsets_; }
  bool symmetric() const noexcept { return symmetric_; }
  std::uint64_t total() const noexcept { return total_; }

  double operator()(int i, int j) const { return cells_[static_cast<std::size_t>(i) * levels_ + j]; }
  std::uint64_t count(int i, int j) const { return counts_[static_cast<std::size_t>(i) * levels_ + j]; }

  const std::vector<double>& cells() const noexcept { return cells_; }
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }

 private:
  int levels_;
  std::vector<Offset> offsets_;
  bool symmetric_;
  std::uint64_t total_ = 0;
  std::vector<std::uint64_t> counts_;
  std::vector<double> cells_;
};

/// Quantized bin of an 8-bit sample: floor(v * levels / 256).
inline int glcm_bin(std::uint8_t v, int levels) { return (static_cast<int>(v) * levels) >> 8; }

GlcmMatrix compute_glcm(const GrayImage& gray, int levels,
                        const std::vector<Offset>& offsets, bool symmetric);

inline GlcmMatrix compute_glcm(const GrayImage& gray, const GlcmParams& params = {}) {
  return compute_glcm(gray, params.levels, params.offsets, params.symmetric);
}

/// sum_ij p(i,j) (i - j)^2
double glcm_contrast(const GlcmMatrix& glcm);

/// sum_ij p(i,j) / (1 + (i - j)^2)
double glcm_homogeneity(const GlcmMatrix& glcm);

/// sum_ij p(i,j)^2
double glcm_energy(const GlcmMatrix& glcm);

/// Pearson correlation of the (i, j) pair distribution; 1 when either
/// marginal has zero variance.
double glcm_correlation(const GlcmMatrix& glcm);

}  // namespace sid
