#include "sid/alterations.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "sid/codec.hpp"
#include "sid/errors.hpp"
#include "sid/imageops.hpp"
#include "sid/random.hpp"

namespace sid {

namespace {

constexpr std::array<std::pair<AlterationKind, std::string_view>, 6> kNames = {{
    {AlterationKind::kJpegCompress, "JpegCompress"},
    {AlterationKind::kGaussianBlur, "GaussianBlur"},
    {AlterationKind::kAdvancedBlur, "AdvancedBlur"},
    {AlterationKind::kBrightnessContrast, "BrightnessContrast"},
    {AlterationKind::kGamma, "Gamma"},
    {AlterationKind::kHorizontalFlip, "HorizontalFlip"},
}};

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

double require(const ParamValues& params, const std::string& name, AlterationKind kind) {
  auto it = params.find(name);
  if (it == params.end()) {
    fail(ErrorKind::kParameter, std::string(alteration_name(kind)) + " needs parameter '" + name + "'");
  }
  return it->second;
}

ImageBuffer map_lut(const ImageBuffer& img, const std::array<std::uint8_t, 256>& lut) {
  ImageBuffer out = img;
  for (auto& v : out.data()) v = lut[v];
  return out;
}

ImageBuffer blur_separable(const ImageBuffer& img, const std::vector<double>& k) {
  const int r = static_cast<int>(k.size() / 2);
  const int w = img.width();
  const int h = img.height();
  std::vector<double> tmp(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int t = -r; t <= r; ++t) acc += k[t + r] * img.at(reflect_index(x + t, w), y, c);
        tmp[(static_cast<std::size_t>(y) * w + x) * 3 + c] = acc;
      }
    }
  }
  ImageBuffer out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int t = -r; t <= r; ++t) {
          acc += k[t + r] * tmp[(static_cast<std::size_t>(reflect_index(y + t, h)) * w + x) * 3 + c];
        }
        out.at(x, y, c) = to_byte(acc);
      }
    }
  }
  return out;
}

ImageBuffer blur_2d(const ImageBuffer& img, const std::vector<double>& k) {
  const int size = static_cast<int>(std::lround(std::sqrt(static_cast<double>(k.size()))));
  const int r = size / 2;
  const int w = img.width();
  const int h = img.height();
  ImageBuffer out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int dy = -r; dy <= r; ++dy) {
          const int sy = reflect_index(y + dy, h);
          for (int dx = -r; dx <= r; ++dx) {
            acc += k[static_cast<std::size_t>(dy + r) * size + (dx + r)] *
                   img.at(reflect_index(x + dx, w), sy, c);
          }
        }
        out.at(x, y, c) = to_byte(acc);
      }
    }
  }
  return out;
}

}  // namespace

std::string_view alteration_name(AlterationKind kind) {
  for (const auto& [k, name] : kNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<AlterationKind> parse_alteration(std::string_view name) {
  for (const auto& [k, n] : kNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

const ParamRanges& alteration_bounds(AlterationKind kind) {
  static const ParamRanges jpeg = {{"quality", {40.0, 100.0}}};
  static const ParamRanges gblur = {{"sigma", {0.2, 3.0}}};
  static const ParamRanges ablur = {
      {"beta", {0.5, 8.0}}, {"sigma", {0.2, 1.0}}, {"noise", {0.75, 1.25}}};
  static const ParamRanges bc = {{"brightness", {-0.2, 0.2}}, {"contrast", {-0.2, 0.2}}};
  static const ParamRanges gamma = {{"gamma", {0.8, 1.2}}};
  static const ParamRanges none = {};
  switch (kind) {
    case AlterationKind::kJpegCompress: return jpeg;
    case AlterationKind::kGaussianBlur: return gblur;
    case AlterationKind::kAdvancedBlur: return ablur;
    case AlterationKind::kBrightnessContrast: return bc;
    case AlterationKind::kGamma: return gamma;
    case AlterationKind::kHorizontalFlip: return none;
  }
  return none;
}

AlterationSpec AlterationSpec::with_defaults(AlterationKind kind, double probability) {
  return AlterationSpec{kind, alteration_bounds(kind), probability};
}

AlterationSpec AlterationSpec::fixed(AlterationKind kind, const ParamValues& values,
                                     double probability) {
  AlterationSpec spec = with_defaults(kind, probability);
  for (const auto& [name, value] : values) {
    auto it = spec.ranges.find(name);
    if (it == spec.ranges.end()) {
      fail(ErrorKind::kParameter, std::string(alteration_name(kind)) + " has no parameter '" + name + "'");
    }
    it->second = {value, value};
  }
  spec.validate();
  return spec;
}

void AlterationSpec::validate() const {
  if (!(probability >= 0.0 && probability <= 1.0)) {
    fail(ErrorKind::kParameter, "alteration probability must be in [0, 1]");
  }
  const auto& bounds = alteration_bounds(kind);
  if (ranges.size() != bounds.size()) {
    fail(ErrorKind::kParameter, std::string(alteration_name(kind)) + " expects exactly " +
                                    std::to_string(bounds.size()) + " parameter ranges");
  }
  for (const auto& [name, b] : bounds) {
    auto it = ranges.find(name);
    if (it == ranges.end()) {
      fail(ErrorKind::kParameter, std::string(alteration_name(kind)) + " is missing range '" + name + "'");
    }
    const ParamRange& r = it->second;
    if (!(r.lo <= r.hi) || r.lo < b.lo || r.hi > b.hi) {
      fail(ErrorKind::kParameter, std::string(alteration_name(kind)) + " range '" + name +
                                      "' must be a nonempty subrange of [" + std::to_string(b.lo) +
                                      ", " + std::to_string(b.hi) + "]");
    }
  }
}

std::vector<double> gaussian_kernel(double sigma) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * r + 1);
  double sum = 0.0;
  for (int t = -r; t <= r; ++t) {
    k[t + r] = std::exp(-0.5 * (t * t) / (sigma * sigma));
    sum += k[t + r];
  }
  for (auto& v : k) v /= sum;
  return k;
}

std::vector<double> advanced_blur_kernel(double beta, double sigma, double noise_lo,
                                         double noise_hi, std::uint64_t noise_seed) {
  const int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  const int size = 2 * r + 1;
  std::vector<double> k(static_cast<std::size_t>(size) * size);
  CounterRng rng(noise_seed, 0x6b65726e656cull);
  double sum = 0.0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const double d = std::sqrt(static_cast<double>(dx * dx + dy * dy));
      const double base = std::exp(-std::pow(d / sigma, beta));
      const double v = base * rng.uniform(noise_lo, noise_hi);
      k[static_cast<std::size_t>(dy + r) * size + (dx + r)] = v;
      sum += v;
    }
  }
  for (auto& v : k) v /= sum;
  return k;
}

ImageBuffer apply_alteration(const ImageBuffer& img, const AlterationSpec& spec,
                             const ParamValues& params) {
  spec.validate();
  for (const auto& [name, range] : spec.ranges) {
    const double v = require(params, name == "noise" ? "noise_seed" : name, spec.kind);
    if (name == "noise") continue;
    if (!(v >= range.lo && v <= range.hi)) {
      fail(ErrorKind::kParameter, std::string(alteration_name(spec.kind)) + " parameter '" + name +
                                      "' = " + std::to_string(v) + " outside [" +
                                      std::to_string(range.lo) + ", " + std::to_string(range.hi) + "]");
    }
  }

  switch (spec.kind) {
    case AlterationKind::kJpegCompress: {
      const int quality = static_cast<int>(std::lround(params.at("quality")));
      return decode_image(encode_jpeg(img, quality));
    }
    case AlterationKind::kGaussianBlur:
      return blur_separable(img, gaussian_kernel(params.at("sigma")));
    case AlterationKind::kAdvancedBlur: {
      const ParamRange noise = spec.ranges.at("noise");
      const auto seed = static_cast<std::uint64_t>(params.at("noise_seed"));
      return blur_2d(img, advanced_blur_kernel(params.at("beta"), params.at("sigma"), noise.lo,
                                               noise.hi, seed));
    }
    case AlterationKind::kBrightnessContrast: {
      const double b = params.at("brightness");
      const double c = params.at("contrast");
      std::array<std::uint8_t, 256> lut;
      for (int v = 0; v < 256; ++v) {
        const double unit = (v / 255.0 - 0.5) * (1.0 + c) + 0.5 + b;
        lut[v] = to_byte(std::clamp(unit, 0.0, 1.0) * 255.0);
      }
      return map_lut(img, lut);
    }
    case AlterationKind::kGamma: {
      const double g = params.at("gamma");
      std::array<std::uint8_t, 256> lut;
      for (int v = 0; v < 256; ++v) lut[v] = to_byte(255.0 * std::pow(v / 255.0, g));
      return map_lut(img, lut);
    }
    case AlterationKind::kHorizontalFlip:
      return flip_horizontal(img);
  }
  fail(ErrorKind::kParameter, "unknown alteration kind");
}

std::vector<AppliedAlteration> sample_plan(const AugmentationPolicy& policy,
                                           std::uint64_t image_index) {
  std::vector<AppliedAlteration> plan;
  for (std::size_t i = 0; i < policy.steps.size(); ++i) {
    const AlterationSpec& spec = policy.steps[i];
    spec.validate();
    CounterRng rng(policy.seed, image_index, static_cast<std::uint32_t>(i));
    if (!(rng.uniform() < spec.probability)) continue;
    AppliedAlteration step{spec.kind, {}, i};
    // std::map iterates names in sorted order, so the draw order is fixed.
    for (const auto& [name, range] : spec.ranges) {
      if (name == "noise") {
        step.params["noise_seed"] = static_cast<double>(rng.next_u32());
        continue;
      }
      double v = rng.uniform(range.lo, range.hi);
      if (spec.kind == AlterationKind::kJpegCompress) v = std::floor(v + 0.5);
      step.params[name] = std::clamp(v, range.lo, range.hi);
    }
    plan.push_back(std::move(step));
  }
  return plan;
}

AugmentResult augment(const ImageBuffer& img, const AugmentationPolicy& policy,
                      std::uint64_t image_index) {
  AugmentResult result{img, sample_plan(policy, image_index)};
  for (const auto& step : result.applied) {
    result.image = apply_alteration(result.image, policy.steps[step.step_index], step.params);
  }
  return result;
}

AugmentationPolicy susy_policy(std::uint64_t seed) {
  AugmentationPolicy p;
  p.seed = seed;
  p.steps.push_back(AlterationSpec::with_defaults(AlterationKind::kHorizontalFlip, 0.5));
  for (auto kind : {AlterationKind::kJpegCompress, AlterationKind::kGaussianBlur,
                    AlterationKind::kAdvancedBlur, AlterationKind::kBrightnessContrast,
                    AlterationKind::kGamma}) {
    p.steps.push_back(AlterationSpec::with_defaults(kind, 0.2));
  }
  return p;
}

AugmentationPolicy flip_policy(std::uint64_t seed) {
  AugmentationPolicy p;
  p.seed = seed;
  p.steps.push_back(AlterationSpec::with_defaults(AlterationKind::kHorizontalFlip, 0.5));
  return p;
}

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    fail(ErrorKind::kParameter, "psnr needs images of equal size");
  }
  double se = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const double d = static_cast<double>(a.data()[i]) - b.data()[i];
    se += d * d;
  }
  if (se == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = se / static_cast<double>(a.data().size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

}  // namespace sid
