#include "mvc/augment.hpp"

#include <algorithm>
#include <cmath>

#include "mvc/errors.hpp"

namespace mvc::augment {

namespace {

constexpr float kLumaR = 0.299f, kLumaG = 0.587f, kLumaB = 0.114f;

float luma(const Image& img, int y, int x) {
  return kLumaR * img.at(0, y, x) + kLumaG * img.at(1, y, x) + kLumaB * img.at(2, y, x);
}

void clamp01(Image& img) {
  for (auto& v : img.data) v = std::clamp(v, 0.f, 1.f);
}

void adjust_brightness(Image& img, float factor) {
  for (auto& v : img.data) v *= factor;
  clamp01(img);
}

void adjust_contrast(Image& img, float factor) {
  double mean = 0.0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) mean += luma(img, y, x);
  const auto m = static_cast<float>(mean / (img.height * img.width));
  for (auto& v : img.data) v = (v - m) * factor + m;
  clamp01(img);
}

void adjust_saturation(Image& img, float factor) {
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const float g = luma(img, y, x);
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = (img.at(c, y, x) - g) * factor + g;
    }
  clamp01(img);
}

}  // namespace

void AugmentConfig::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(brightness) || !prob(contrast) || !prob(saturation))
    throw ConfigError("jitter strengths must lie in [0, 1]");
  if (!prob(grayscale_prob) || !prob(flip_prob)) throw ConfigError("probabilities must lie in [0, 1]");
  if (!(crop_min_frac > 0.0 && crop_min_frac <= crop_max_frac && crop_max_frac <= 1.0))
    throw ConfigError("crop scale must satisfy 0 < min ≤ max ≤ 1");
  if (out_h < 1 || out_w < 1) throw ConfigError("output size must be positive");
}

AugmentConfig AugmentConfig::none(int out_h, int out_w) {
  AugmentConfig c;
  c.brightness = c.contrast = c.saturation = 0.0;
  c.grayscale_prob = 0.0;
  c.flip_prob = 0.0;
  c.crop_min_frac = c.crop_max_frac = 1.0;
  c.out_h = out_h;
  c.out_w = out_w;
  return c;
}

Image resample(const Image& src, double x0, double y0, double w, double h, int out_h, int out_w) {
  Image out(out_h, out_w);
  const double sx = w / out_w, sy = h / out_h;
  std::vector<int> xi0(static_cast<std::size_t>(out_w)), xi1(xi0.size());
  std::vector<double> xf(xi0.size());
  for (int ox = 0; ox < out_w; ++ox) {
    const double fx = std::clamp(x0 + (ox + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.width - 1));
    const int i = static_cast<int>(std::floor(fx));
    xi0[ox] = i;
    xi1[ox] = std::min(i + 1, src.width - 1);
    xf[ox] = fx - i;
  }
  for (int oy = 0; oy < out_h; ++oy) {
    const double fy = std::clamp(y0 + (oy + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.height - 1));
    const int j0 = static_cast<int>(std::floor(fy));
    const int j1 = std::min(j0 + 1, src.height - 1);
    const double wy = fy - j0;
    for (int c = 0; c < 3; ++c)
      for (int ox = 0; ox < out_w; ++ox) {
        const double wx = xf[ox];
        const double top = src.at(c, j0, xi0[ox]) + wx * (src.at(c, j0, xi1[ox]) - src.at(c, j0, xi0[ox]));
        const double bot = src.at(c, j1, xi0[ox]) + wx * (src.at(c, j1, xi1[ox]) - src.at(c, j1, xi0[ox]));
        out.at(c, oy, ox) = static_cast<float>(top + wy * (bot - top));
      }
  }
  return out;
}

Image hflip(const Image& image) {
  Image out(image.height, image.width);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < image.height; ++y)
      for (int x = 0; x < image.width; ++x) out.at(c, y, x) = image.at(c, y, image.width - 1 - x);
  return out;
}

Image to_grayscale(const Image& image) {
  Image out = image;
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      const float r = image.at(0, y, x), g = image.at(1, y, x), b = image.at(2, y, x);
      if (r == g && g == b) continue;
      const float v = std::clamp(kLumaR * r + kLumaG * g + kLumaB * b, 0.f, 1.f);
      for (int c = 0; c < 3; ++c) out.at(c, y, x) = v;
    }
  return out;
}

Image apply(const Image& image, const AugmentConfig& config, Rng& rng) {
  config.validate();
  if (image.height < 1 || image.width < 1) throw ConfigError("augment: empty image");
  const double base = std::min(image.width, image.height);

  const double frac = config.crop_min_frac == config.crop_max_frac
                          ? config.crop_min_frac
                          : rng.uniform(config.crop_min_frac, config.crop_max_frac);
  const double side = base * std::sqrt(frac);
  if (side < 1.0) throw ConfigError("augment: crop window smaller than one pixel");
  // A full-side crop is centered, matching eval_transform.
  const bool full = frac == 1.0;
  const double x0 = full ? (image.width - side) / 2.0 : rng.uniform(0.0, image.width - side);
  const double y0 = full ? (image.height - side) / 2.0 : rng.uniform(0.0, image.height - side);
  Image out = resample(image, x0, y0, side, side, config.out_h, config.out_w);

  if (config.flip_prob > 0.0 && rng.bernoulli(config.flip_prob)) out = hflip(out);

  auto factor = [&rng](double strength) { return static_cast<float>(rng.uniform(1.0 - strength, 1.0 + strength)); };
  if (config.brightness > 0.0) adjust_brightness(out, factor(config.brightness));
  if (config.contrast > 0.0) adjust_contrast(out, factor(config.contrast));
  if (config.saturation > 0.0) adjust_saturation(out, factor(config.saturation));

  if (config.grayscale_prob > 0.0 && rng.bernoulli(config.grayscale_prob)) out = to_grayscale(out);
  clamp01(out);
  return out;
}

Image eval_transform(const Image& image, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw ConfigError("eval_transform: output size must be positive");
  const double side = std::min(image.width, image.height);
  const double x0 = (image.width - side) / 2.0;
  const double y0 = (image.height - side) / 2.0;
  Image out = resample(image, x0, y0, side, side, out_h, out_w);
  clamp01(out);
  return out;
}

}  // namespace mvc::augment
