#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace sid {

/// 8-bit interleaved RGB raster, row-major.
class ImageBuffer {
 public:
  static constexpr int kChannels = 3;

  ImageBuffer() = default;
  ImageBuffer(int width, int height);
  ImageBuffer(int width, int height, std::vector<std::uint8_t> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return data_.empty(); }

  std::uint8_t& at(int x, int y, int c) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * kChannels + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * kChannels + c];
  }

  const std::vector<std::uint8_t>& data() const noexcept { return data_; }
  std::vector<std::uint8_t>& data() noexcept { return data_; }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Single-channel 8-bit luma raster.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height);
  GrayImage(int width, int height, std::vector<std::uint8_t> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  std::uint8_t& at(int x, int y) {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  std::uint8_t at(int x, int y) const {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }

  const std::vector<std::uint8_t>& data() const noexcept { return data_; }

  /// Copy of the rectangle [x, x+w) x [y, y+h); must lie inside the image.
  GrayImage crop(int x, int y, int w, int h) const;

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Square crop classified independently before image-level aggregation.
struct Patch {
  ImageBuffer pixels;
  int origin_x = 0;
  int origin_y = 0;
  std::string source_id;
  // Source was smaller than the patch side and had to be reflect-padded.
  bool padded = false;

  int side() const noexcept { return pixels.width(); }
};

}  // namespace sid
