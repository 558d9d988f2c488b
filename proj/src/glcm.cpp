#include "sid/glcm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "sid/errors.hpp"

namespace sid {

std::vector<Offset> default_glcm_offsets() {
  return {{1, 0}, {1, -1}, {0, -1}, {-1, -1}};
}

GlcmMatrix::GlcmMatrix(int levels, std::vector<Offset> offsets, bool symmetric,
                       std::vector<std::uint64_t> counts)
    : levels_(levels),
      offsets_(std::move(offsets)),
      symmetric_(symmetric),
      counts_(std::move(counts)) {
  if (counts_.size() != static_cast<std::size_t>(levels_) * levels_) {
    fail(ErrorKind::kParameter, "GLCM count table has wrong size");
  }
  for (auto c : counts_) total_ += c;
  if (total_ == 0) fail(ErrorKind::kEmptyPairs, "GLCM has no co-occurring pairs");
  cells_.resize(counts_.size());
  const double denom = static_cast<double>(total_);
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    cells_[i] = static_cast<double>(counts_[i]) / denom;
  }
}

GlcmMatrix compute_glcm(const GrayImage& gray, int levels,
                        const std::vector<Offset>& offsets, bool symmetric) {
  if (levels < 2 || levels > 256) fail(ErrorKind::kParameter, "GLCM levels must be in [2, 256]");
  if (offsets.empty()) fail(ErrorKind::kParameter, "GLCM needs at least one offset");
  const int w = gray.width();
  const int h = gray.height();
  for (const auto& o : offsets) {
    if (o.dx == 0 && o.dy == 0) fail(ErrorKind::kParameter, "GLCM offset must be nonzero");
    if (std::abs(o.dx) >= w || std::abs(o.dy) >= h) {
      fail(ErrorKind::kEmptyPairs, "image " + std::to_string(w) + "x" + std::to_string(h) +
                                       " is too small for offset (" + std::to_string(o.dx) +
                                       "," + std::to_string(o.dy) + ")");
    }
  }

  std::vector<std::uint8_t> bins(gray.data().size());
  for (std::size_t i = 0; i < bins.size(); ++i) {
    bins[i] = static_cast<std::uint8_t>(glcm_bin(gray.data()[i], levels));
  }

  std::vector<std::uint64_t> counts(static_cast<std::size_t>(levels) * levels, 0);
  for (const auto& o : offsets) {
    const int x_begin = std::max(0, -o.dx);
    const int x_end = std::min(w, w - o.dx);
    const int y_begin = std::max(0, -o.dy);
    const int y_end = std::min(h, h - o.dy);
    for (int y = y_begin; y < y_end; ++y) {
      const std::uint8_t* row = bins.data() + static_cast<std::size_t>(y) * w;
      const std::uint8_t* nrow = bins.data() + static_cast<std::size_t>(y + o.dy) * w;
      for (int x = x_begin; x < x_end; ++x) {
        const int a = row[x];
        const int b = nrow[x + o.dx];
        ++counts[static_cast<std::size_t>(a) * levels + b];
        if (symmetric) ++counts[static_cast<std::size_t>(b) * levels + a];
      }
    }
  }
  return GlcmMatrix(levels, offsets, symmetric, std::move(counts));
}

double glcm_contrast(const GlcmMatrix& glcm) {
  // Integer accumulation makes equal-contrast windows compare exactly equal,
  // which the patch tie-break relies on.
  std::uint64_t acc = 0;
  const int n = glcm.levels();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const auto d = static_cast<std::uint64_t>((i - j) * (i - j));
      acc += glcm.count(i, j) * d;
    }
  }
  return glcm.total() == 0 ? 0.0 : static_cast<double>(acc) / static_cast<double>(glcm.total());
}

double glcm_homogeneity(const GlcmMatrix& glcm) {
  double acc = 0.0;
  const int n = glcm.levels();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double d = i - j;
      acc += glcm(i, j) / (1.0 + d * d);
    }
  }
  return acc;
}

double glcm_energy(const GlcmMatrix& glcm) {
  double acc = 0.0;
  for (double p : glcm.cells()) acc += p * p;
  return acc;
}

double glcm_correlation(const GlcmMatrix& glcm) {
  const int n = glcm.levels();
  double mu_i = 0.0, mu_j = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      mu_i += i * glcm(i, j);
      mu_j += j * glcm(i, j);
    }
  }
  double var_i = 0.0, var_j = 0.0, cov = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double p = glcm(i, j);
      var_i += p * (i - mu_i) * (i - mu_i);
      var_j += p * (j - mu_j) * (j - mu_j);
      cov += p * (i - mu_i) * (j - mu_j);
    }
  }
  if (var_i < 1e-15 || var_j < 1e-15) return 1.0;
  return cov / std::sqrt(var_i * var_j);
}

}  // namespace sid
