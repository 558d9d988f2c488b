#include "sid/patches.hpp"

#include <algorithm>

#include "sid/errors.hpp"

namespace sid {

std::vector<int> axis_origins(int extent, int side, int stride) {
  std::vector<int> out;
  if (extent < side) return out;
  const int last = extent - side;
  for (int o = 0; o <= last; o += stride) out.push_back(o);
  if (out.back() != last) out.push_back(last);
  return out;
}

std::vector<PatchCandidate> enumerate_candidates(const ImageBuffer& img, const PatchGrid& grid) {
  if (grid.side < 1 || grid.stride < 1 || grid.max_candidates < 1) {
    fail(ErrorKind::kParameter, "patch grid side, stride and candidate cap must be positive");
  }
  std::vector<int> xs, ys;
  for (int stride = grid.stride;; stride += grid.stride) {
    xs = axis_origins(img.width(), grid.side, stride);
    ys = axis_origins(img.height(), grid.side, stride);
    if (xs.size() * ys.size() <= static_cast<std::size_t>(grid.max_candidates)) break;
  }
  std::vector<PatchCandidate> out;
  if (xs.empty() || ys.empty()) return out;
  const GrayImage gray = to_grayscale(img);
  out.reserve(xs.size() * ys.size());
  for (int y : ys) {
    for (int x : xs) {
      const GrayImage window = gray.crop(x, y, grid.side, grid.side);
      out.push_back({x, y, glcm_contrast(compute_glcm(window, grid.glcm))});
    }
  }
  return out;
}

std::vector<Patch> select_top_patches(const ImageBuffer& img, int k, const PatchGrid& grid,
                                      const std::string& source_id) {
  if (k < 1) fail(ErrorKind::kParameter, "k must be at least 1");
  if (img.width() < grid.side || img.height() < grid.side) {
    return {center_crop(img, grid.side, source_id)};
  }
  auto candidates = enumerate_candidates(img, grid);
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const PatchCandidate& a, const PatchCandidate& b) {
                     if (a.contrast != b.contrast) return a.contrast > b.contrast;
                     if (a.origin_y != b.origin_y) return a.origin_y < b.origin_y;
                     return a.origin_x < b.origin_x;
                   });
  const std::size_t n = std::min(candidates.size(), static_cast<std::size_t>(k));
  std::vector<Patch> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Patch p;
    p.origin_x = candidates[i].origin_x;
    p.origin_y = candidates[i].origin_y;
    p.source_id = source_id;
    p.pixels = crop(img, p.origin_x, p.origin_y, grid.side, grid.side);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace sid
