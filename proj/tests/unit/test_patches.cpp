#include <algorithm>
#include <tuple>
#include <vector>

#include "doctest.h"
#include "sid/imageops.hpp"
#include "sid/patches.hpp"
#include "test_support.hpp"

using namespace sid;

using testing::exhaustive_ranking;

TEST_CASE("axis origins include the flush position") {
  CHECK(axis_origins(448, 224, 112) == std::vector<int>{0, 112, 224});
  CHECK(axis_origins(300, 224, 112) == std::vector<int>{0, 76});
  CHECK(axis_origins(224, 224, 112) == std::vector<int>{0});
  CHECK(axis_origins(100, 224, 112).empty());
}

TEST_CASE("select_top_patches equals an exhaustive sort by contrast") {
  CounterRng rng(77, 0);
  for (int n = 0; n < 120; ++n) {
    const int side = 8 + static_cast<int>(rng.below(9));
    const int stride = 2 + static_cast<int>(rng.below(side));
    const int w = side + static_cast<int>(rng.below(24));
    const int h = side + static_cast<int>(rng.below(24));
    // Quantized noise produces occasional exact ties.
    ImageBuffer img = testing::random_image(rng, w, h);
    for (auto& v : img.data()) v = static_cast<std::uint8_t>(v & 0xC0);
    PatchGrid grid;
    grid.side = side;
    grid.stride = stride;
    grid.max_candidates = 1000;
    const int k = 1 + static_cast<int>(rng.below(6));
    const auto got = select_top_patches(img, k, grid, "img");
    const auto want = exhaustive_ranking(img, side, stride);
    REQUIRE(got.size() == std::min<std::size_t>(k, want.size()));
    for (std::size_t i = 0; i < got.size(); ++i) {
      REQUIRE(got[i].origin_x == want[i].x);
      REQUIRE(got[i].origin_y == want[i].y);
      REQUIRE(got[i].pixels == crop(img, want[i].x, want[i].y, side, side));
      REQUIRE(got[i].source_id == "img");
    }
  }
}

TEST_CASE("uniform images break ties in row-major origin order") {
  const ImageBuffer img = testing::constant_image(64, 48, 90, 90, 90);
  const auto got = select_top_patches(img, 5, 16, 16);
  const std::vector<std::pair<int, int>> want = {{0, 0}, {16, 0}, {32, 0}, {48, 0}, {0, 16}};
  REQUIRE(got.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(got[i].origin_x == want[i].first);
    CHECK(got[i].origin_y == want[i].second);
  }
}

TEST_CASE("small images fall back to the padded center crop") {
  CounterRng rng(1, 5);
  const ImageBuffer img = testing::random_image(rng, 20, 40);
  const auto got = select_top_patches(img, 5, 32, 16);
  REQUIRE(got.size() == 1);
  CHECK(got[0].padded);
  CHECK(got[0].side() == 32);
}

TEST_CASE("candidate grids are capped by coarsening the stride") {
  CounterRng rng(2, 5);
  const ImageBuffer img = testing::random_image(rng, 200, 200);
  PatchGrid grid;
  grid.side = 16;
  grid.stride = 4;
  grid.max_candidates = 64;
  const auto cands = enumerate_candidates(img, grid);
  CHECK(cands.size() <= 64);
  CHECK(cands.size() > 16);
}
