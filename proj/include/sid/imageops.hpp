#pragma once

#include <string>

#include "sid/image.hpp"

namespace sid {

inline constexpr int kDefaultPatchSide = 224;

/// Rec.601 luma, rounded half up: (299 R + 587 G + 114 B + 500) / 1000.
GrayImage to_grayscale(const ImageBuffer& img);

/// Index mapping for mirror padding that does not repeat the edge sample
/// (…, 2, 1, 0, 1, 2, …). Valid for any integer index and n >= 1.
int reflect_index(int i, int n);

/// Grows the image to at least min_w x min_h by mirroring; the added margin
/// is split evenly, the extra pixel going right/bottom. Returns a copy when
/// the image is already large enough.
ImageBuffer reflect_pad(const ImageBuffer& img, int min_w, int min_h);

ImageBuffer crop(const ImageBuffer& img, int x, int y, int w, int h);

/// Center crop of side x side. Images smaller than the side along either axis
/// are reflect-padded first and the patch is marked padded.
Patch center_crop(const ImageBuffer& img, int side = kDefaultPatchSide,
                  const std::string& source_id = {});

/// Bilinear resampling with half-pixel centers. Aspect ratio is not kept.
ImageBuffer resize_bilinear(const ImageBuffer& img, int out_w, int out_h);

ImageBuffer flip_horizontal(const ImageBuffer& img);

}  // namespace sid
