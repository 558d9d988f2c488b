#include "sid/image.hpp"

#include <string>

#include "sid/errors.hpp"

namespace sid {

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDecode: return "decode_error";
    case ErrorKind::kUnsupportedFormat: return "unsupported_format";
    case ErrorKind::kParameter: return "parameter_error";
    case ErrorKind::kEmptyPairs: return "empty_pair_error";
    case ErrorKind::kLoad: return "load_error";
    case ErrorKind::kVersion: return "version_error";
    case ErrorKind::kContractViolation: return "contract_violation";
    case ErrorKind::kEmptyDataset: return "empty_dataset";
    case ErrorKind::kDegenerateClass: return "degenerate_class";
    case ErrorKind::kUndefinedValue: return "undefined_value";
    case ErrorKind::kValidation: return "validation_error";
    case ErrorKind::kIo: return "io_error";
  }
  return "error";
}

namespace {

void check_dims(int width, int height) {
  if (width < 1 || height < 1) {
    fail(ErrorKind::kParameter, "image dimensions must be positive, got " +
                                    std::to_string(width) + "x" +
                                    std::to_string(height));
  }
}

}  // namespace

ImageBuffer::ImageBuffer(int width, int height)
    : width_(width), height_(height) {
  check_dims(width, height);
  data_.assign(static_cast<std::size_t>(width) * height * kChannels, 0);
}

ImageBuffer::ImageBuffer(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width, height);
  if (data_.size() != static_cast<std::size_t>(width) * height * kChannels) {
    fail(ErrorKind::kParameter, "RGB buffer length does not match dimensions");
  }
}

GrayImage::GrayImage(int width, int height) : width_(width), height_(height) {
  check_dims(width, height);
  data_.assign(static_cast<std::size_t>(width) * height, 0);
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width, height);
  if (data_.size() != static_cast<std::size_t>(width) * height) {
    fail(ErrorKind::kParameter, "gray buffer length does not match dimensions");
  }
}

GrayImage GrayImage::crop(int x, int y, int w, int h) const {
  if (x < 0 || y < 0 || w < 1 || h < 1 || x + w > width_ || y + h > height_) {
    fail(ErrorKind::kParameter, "crop rectangle outside gray image");
  }
  GrayImage out(w, h);
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) out.at(col, row) = at(x + col, y + row);
  }
  return out;
}

}  // namespace sid
