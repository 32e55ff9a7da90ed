#pragma once

// Stochastic augmentation: random resized crop → horizontal flip → color
// jitter → random grayscale, with bilinear resampling.

#include "mvc/dataio.hpp"
#include "mvc/rng.hpp"

namespace mvc::augment {

struct AugmentConfig {
  double brightness = 0.4;
  double contrast = 0.4;
  double saturation = 0.4;
  double grayscale_prob = 0.2;
  double crop_min_frac = 0.5;  // of the largest centered square's area
  double crop_max_frac = 1.0;
  double flip_prob = 0.5;
  int out_h = 32;
  int out_w = 32;

  void validate() const;
  // Every random component disabled; apply() reduces to eval_transform().
  static AugmentConfig none(int out_h, int out_w);
};

using data::Image;

// Bilinear resampling of a source window (x0, y0, w, h) onto an out_h×out_w
// grid with half-pixel centers: src = x0 + (o + 0.5)·w/out_w − 0.5, clamped
// to the source pixel range.
Image resample(const Image& src, double x0, double y0, double w, double h, int out_h, int out_w);

Image apply(const Image& image, const AugmentConfig& config, Rng& rng);

// Center square crop, then bilinear resize.
Image eval_transform(const Image& image, int out_h, int out_w);

// Individual stages, exposed for tests.
Image hflip(const Image& image);
Image to_grayscale(const Image& image);

}  // namespace mvc::augment
