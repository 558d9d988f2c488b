#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "sid/image.hpp"

namespace sid {

enum class ImageFormat { kPng, kJpeg };

/// Detects PNG/JPEG from the stream signature; nullopt when neither matches.
std::optional<ImageFormat> sniff_format(std::span<const std::uint8_t> bytes);

/// Decodes an 8-bit PNG or JPEG stream into RGB. Alpha is composited over
/// white and grayscale is replicated to three channels. The hint is only
/// consulted when the signature is inconclusive.
ImageBuffer decode_image(std::span<const std::uint8_t> bytes,
                         std::optional<ImageFormat> format_hint = std::nullopt);

ImageBuffer read_image(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const ImageBuffer& img);

/// Baseline JPEG with 4:2:0 chroma subsampling; quality on the 1-100 scale.
std::vector<std::uint8_t> encode_jpeg(const ImageBuffer& img, int quality);

void write_png(const std::filesystem::path& path, const ImageBuffer& img);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace sid
