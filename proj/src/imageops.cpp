#include "sid/imageops.hpp"

#include <algorithm>
#include <cmath>

#include "sid/errors.hpp"

namespace sid {

GrayImage to_grayscale(const ImageBuffer& img) {
  GrayImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const unsigned v = 299u * img.at(x, y, 0) + 587u * img.at(x, y, 1) +
                         114u * img.at(x, y, 2) + 500u;
      out.at(x, y) = static_cast<std::uint8_t>(v / 1000u);
    }
  }
  return out;
}

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

ImageBuffer reflect_pad(const ImageBuffer& img, int min_w, int min_h) {
  const int w = std::max(img.width(), min_w);
  const int h = std::max(img.height(), min_h);
  if (w == img.width() && h == img.height()) return img;
  const int left = (w - img.width()) / 2;
  const int top = (h - img.height()) / 2;
  ImageBuffer out(w, h);
  for (int y = 0; y < h; ++y) {
    const int sy = reflect_index(y - top, img.height());
    for (int x = 0; x < w; ++x) {
      const int sx = reflect_index(x - left, img.width());
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(sx, sy, c);
    }
  }
  return out;
}

ImageBuffer crop(const ImageBuffer& img, int x, int y, int w, int h) {
  if (x < 0 || y < 0 || w < 1 || h < 1 || x + w > img.width() || y + h > img.height()) {
    fail(ErrorKind::kParameter, "crop rectangle outside image");
  }
  ImageBuffer out(w, h);
  const auto& src = img.data();
  auto& dst = out.data();
  for (int row = 0; row < h; ++row) {
    const auto begin = src.begin() + (static_cast<std::ptrdiff_t>(y + row) * img.width() + x) * 3;
    std::copy(begin, begin + static_cast<std::ptrdiff_t>(w) * 3,
              dst.begin() + static_cast<std::ptrdiff_t>(row) * w * 3);
  }
  return out;
}

Patch center_crop(const ImageBuffer& img, int side, const std::string& source_id) {
  if (side < 1) fail(ErrorKind::kParameter, "patch side must be positive");
  Patch patch;
  patch.source_id = source_id;
  if (img.width() < side || img.height() < side) {
    const ImageBuffer padded = reflect_pad(img, side, side);
    patch.padded = true;
    const int ox = (padded.width() - side) / 2;
    const int oy = (padded.height() - side) / 2;
    patch.pixels = crop(padded, ox, oy, side, side);
    // Origins are reported in source coordinates; padded axes start at 0.
    patch.origin_x = img.width() < side ? 0 : ox;
    patch.origin_y = img.height() < side ? 0 : oy;
    return patch;
  }
  patch.origin_x = (img.width() - side) / 2;
  patch.origin_y = (img.height() - side) / 2;
  patch.pixels = crop(img, patch.origin_x, patch.origin_y, side, side);
  return patch;
}

ImageBuffer resize_bilinear(const ImageBuffer& img, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) fail(ErrorKind::kParameter, "resize target must be positive");
  ImageBuffer out(out_w, out_h);
  const double sx = static_cast<double>(img.width()) / out_w;
  const double sy = static_cast<double>(img.height()) / out_h;

  struct Tap {
    int i0, i1;
    double w1;
  };
  auto taps = [](int n_out, int n_in, double scale) {
    std::vector<Tap> t(n_out);
    for (int o = 0; o < n_out; ++o) {
      double src = (o + 0.5) * scale - 0.5;
      src = std::clamp(src, 0.0, static_cast<double>(n_in - 1));
      const int i0 = static_cast<int>(std::floor(src));
      const int i1 = std::min(i0 + 1, n_in - 1);
      t[o] = {i0, i1, src - i0};
    }
    return t;
  };
  const auto xt = taps(out_w, img.width(), sx);
  const auto yt = taps(out_h, img.height(), sy);

  for (int y = 0; y < out_h; ++y) {
    const Tap& ty = yt[y];
    for (int x = 0; x < out_w; ++x) {
      const Tap& tx = xt[x];
      for (int c = 0; c < 3; ++c) {
        const double top = img.at(tx.i0, ty.i0, c) * (1.0 - tx.w1) + img.at(tx.i1, ty.i0, c) * tx.w1;
        const double bot = img.at(tx.i0, ty.i1, c) * (1.0 - tx.w1) + img.at(tx.i1, ty.i1, c) * tx.w1;
        const double v = top * (1.0 - ty.w1) + bot * ty.w1;
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
      }
    }
  }
  return out;
}

ImageBuffer flip_horizontal(const ImageBuffer& img) {
  ImageBuffer out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < 3; ++c) out.at(img.width() - 1 - x, y, c) = img.at(x, y, c);
    }
  }
  return out;
}

}  // namespace sid
