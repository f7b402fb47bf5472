#pragma once

#include <random>

#include "histoconv/tensor.hpp"

namespace histoconv {

struct AugmentConfig {
  double rotation_max_deg = 25.0;
  bool hflip = true;
  bool vflip = true;
  double shear_max_deg = 10.0;
  double zoom_lo = 0.9;
  double zoom_hi = 1.1;

  void validate() const;   // angles >= 0, 0 < zoom_lo <= zoom_hi
  bool enabled() const;    // false when every transform is a no-op
  static AugmentConfig disabled_config();
};

// One concrete draw of the stochastic transform parameters.
struct AffineSample {
  bool hflip = false;
  bool vflip = false;
  double rotation_deg = 0.0;
  double shear_deg = 0.0;
  double zoom = 1.0;

  bool is_identity() const;
};

AffineSample sample_augment(const AugmentConfig& cfg, std::mt19937& rng);

// Applies flips, rotation, shear and zoom about the image centre as a single
// composed affine map, sampling output pixels from the input with bilinear
// interpolation; out-of-bounds reads clamp to the nearest edge pixel. Values
// are clamped to [0,1]. An identity sample returns the input bitwise.
TensorF apply_affine(const TensorF& img, const AffineSample& sample);

TensorF augment(const TensorF& img, const AugmentConfig& cfg, std::mt19937& rng);

// Bilinear resize with pixel centres at (i+0.5)*scale-0.5 (half-pixel
// convention); resizing to the input size reproduces it bitwise.
TensorF resize_bilinear(const TensorF& img, std::int64_t out_h, std::int64_t out_w);

}  // namespace histoconv
