#pragma once

#include <string>
#include <vector>

#include "sid/glcm.hpp"
#include "sid/image.hpp"
#include "sid/imageops.hpp"

namespace sid {

struct PatchGrid {
  int side = kDefaultPatchSide;
  int stride = 112;
  // Upper bound on candidates; the stride is scaled up by an integer factor
  // until the grid fits.
  int max_candidates = 64;
  GlcmParams glcm;
};

struct PatchCandidate {
  int origin_x = 0;
  int origin_y = 0;
  double contrast = 0.0;
};

/// Grid origins along one axis: 0, stride, 2*stride, ... plus the last aligned
/// position (extent - side) when the stride does not land on it.
std::vector<int> axis_origins(int extent, int side, int stride);

/// Every candidate window with its GLCM contrast, in row-major origin order.
/// Images smaller than the side yield no candidates.
std::vector<PatchCandidate> enumerate_candidates(const ImageBuffer& img, const PatchGrid& grid);

/// Up to k patches with the highest GLCM contrast, ties broken by row-major
/// origin. Images smaller than the side return the padded center crop.
std::vector<Patch> select_top_patches(const ImageBuffer& img, int k, const PatchGrid& grid,
                                      const std::string& source_id = {});

inline std::vector<Patch> select_top_patches(const ImageBuffer& img, int k, int side, int stride,
                                             const std::string& source_id = {}) {
  PatchGrid grid;
  grid.side = side;
  grid.stride = stride;
  return select_top_patches(img, k, grid, source_id);
}

}  // namespace sid
