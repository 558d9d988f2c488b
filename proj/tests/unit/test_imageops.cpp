#include "doctest.h"
#include "sid/errors.hpp"
#include "sid/imageops.hpp"
#include "test_support.hpp"

using namespace sid;

TEST_CASE("grayscale uses integer BT.601 weights with rounding") {
  ImageBuffer img(4, 1);
  const int px[4][3] = {{255, 0, 0}, {0, 255, 0}, {0, 0, 255}, {10, 20, 30}};
  for (int x = 0; x < 4; ++x) {
    for (int c = 0; c < 3; ++c) img.at(x, 0, c) = static_cast<std::uint8_t>(px[x][c]);
  }
  const GrayImage g = to_grayscale(img);
  for (int x = 0; x < 4; ++x) {
    const int expect = (299 * px[x][0] + 587 * px[x][1] + 114 * px[x][2] + 500) / 1000;
    CHECK(int(g.at(x, 0)) == expect);
  }
}

TEST_CASE("reflect_index mirrors without repeating the edge") {
  CHECK(reflect_index(-1, 5) == 1);
  CHECK(reflect_index(-2, 5) == 2);
  CHECK(reflect_index(5, 5) == 3);
  CHECK(reflect_index(6, 5) == 2);
  CHECK(reflect_index(2, 5) == 2);
  CHECK(reflect_index(-3, 1) == 0);
}

TEST_CASE("padded center crop of a small image is mirror symmetric") {
  CounterRng rng(3, 0);
  const ImageBuffer img = testing::random_image(rng, 7, 5);
  const Patch p = center_crop(img, 11, "tiny");
  CHECK(p.padded);
  CHECK(p.side() == 11);
  CHECK(p.origin_x == 0);
  CHECK(p.origin_y == 0);
  // Padding is split evenly: 2 columns each side, 3 rows each side.
  for (int y = 0; y < 11; ++y) {
    for (int x = 0; x < 11; ++x) {
      const int sx = reflect_index(x - 2, 7);
      const int sy = reflect_index(y - 3, 5);
      for (int c = 0; c < 3; ++c) REQUIRE(p.pixels.at(x, y, c) == img.at(sx, sy, c));
    }
  }
  // Reflection about the first source column (padded x = 2).
  for (int y = 0; y < 11; ++y) {
    CHECK(p.pixels.at(1, y, 0) == p.pixels.at(3, y, 0));
    CHECK(p.pixels.at(0, y, 0) == p.pixels.at(4, y, 0));
  }
}

TEST_CASE("center crop of a large image reports its origin") {
  CounterRng rng(4, 0);
  const ImageBuffer img = testing::random_image(rng, 300, 250);
  const Patch p = center_crop(img, 224);
  CHECK_FALSE(p.padded);
  CHECK(p.origin_x == 38);
  CHECK(p.origin_y == 13);
  CHECK(p.pixels == crop(img, 38, 13, 224, 224));
}

TEST_CASE("bilinear upsampling of a checkerboard matches hand-computed weights") {
  ImageBuffer img(2, 2);
  const std::uint8_t v[2][2] = {{0, 255}, {255, 0}};
  for (int y = 0; y < 2; ++y) {
    for (int x = 0; x < 2; ++x) {
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = v[y][x];
    }
  }
  const ImageBuffer r = resize_bilinear(img, 4, 4);
  // Source coordinate of output i is (i + 0.5) / 2 - 0.5 clamped to [0, 1]:
  // 0, 0.25, 0.75, 1.
  const double t[4] = {0.0, 0.25, 0.75, 1.0};
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) {
      const double value = (1 - t[y]) * ((1 - t[x]) * 0 + t[x] * 255) + t[y] * ((1 - t[x]) * 255 + t[x] * 0);
      CHECK(int(r.at(x, y, 0)) == int(std::floor(value + 0.5)));
    }
  }
  CHECK(int(r.at(1, 1, 0)) == 96);  // 0.375 * 255 = 95.625
  CHECK(int(r.at(1, 0, 0)) == 64);  // 0.25 * 255 = 63.75
}

TEST_CASE("resize to the same size is the identity; flip is an involution") {
  CounterRng rng(9, 0);
  const ImageBuffer img = testing::random_image(rng, 13, 9);
  CHECK(resize_bilinear(img, 13, 9) == img);
  const ImageBuffer f = flip_horizontal(img);
  CHECK(f.at(0, 0, 1) == img.at(12, 0, 1));
  CHECK(flip_horizontal(f) == img);
}

TEST_CASE("invalid geometry raises parameter errors") {
  const ImageBuffer img = testing::constant_image(4, 4, 1, 2, 3);
  CHECK_THROWS_AS(crop(img, 2, 2, 3, 1), Error);
  CHECK_THROWS_AS(resize_bilinear(img, 0, 3), Error);
  CHECK_THROWS_AS(center_crop(img, 0), Error);
}
