#include "histoconv/augment.hpp"

#include <algorithm>
#include <cmath>

namespace histoconv {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Mat2 {
  // row-major 2x2
  double a = 1, b = 0, c = 0, d = 1;
};

Mat2 multiply(const Mat2& m, const Mat2& n) {
  return {m.a * n.a + m.b * n.c, m.a * n.b + m.b * n.d,
          m.c * n.a + m.d * n.c, m.c * n.b + m.d * n.d};
}

Mat2 inverse(const Mat2& m) {
  const double det = m.a * m.d - m.b * m.c;
  if (std::abs(det) < 1e-12) throw Error("augmentation transform is singular");
  return {m.d / det, -m.b / det, -m.c / det, m.a / det};
}

float sample_clamped(const TensorF& img, double sy, double sx, std::int64_t c) {
  const std::int64_t h = img.dim(0), w = img.dim(1);
  sy = std::clamp(sy, 0.0, double(h - 1));
  sx = std::clamp(sx, 0.0, double(w - 1));
  const std::int64_t y0 = std::int64_t(std::floor(sy));
  const std::int64_t x0 = std::int64_t(std::floor(sx));
  const std::int64_t y1 = std::min(y0 + 1, h - 1);
  const std::int64_t x1 = std::min(x0 + 1, w - 1);
  const double fy = sy - double(y0);
  const double fx = sx - double(x0);
  const double top = double(img(y0, x0, c)) * (1 - fx) + double(img(y0, x1, c)) * fx;
  const double bot = double(img(y1, x0, c)) * (1 - fx) + double(img(y1, x1, c)) * fx;
  return float(top * (1 - fy) + bot * fy);
}

}  // namespace

void AugmentConfig::validate() const {
  if (rotation_max_deg < 0) throw Error("rotation_max_deg must be >= 0");
  if (shear_max_deg < 0) throw Error("shear_max_deg must be >= 0");
  if (!(zoom_lo > 0) || !(zoom_hi > 0)) throw Error("zoom factors must be > 0");
  if (zoom_lo > zoom_hi) throw Error("zoom_lo must be <= zoom_hi");
}

bool AugmentConfig::enabled() const {
  return hflip || vflip || rotation_max_deg > 0 || shear_max_deg > 0 || zoom_lo != 1.0 ||
         zoom_hi != 1.0;
}

AugmentConfig AugmentConfig::disabled_config() {
  AugmentConfig c;
  c.rotation_max_deg = 0;
  c.hflip = false;
  c.vflip = false;
  c.shear_max_deg = 0;
  c.zoom_lo = c.zoom_hi = 1.0;
  return c;
}

bool AffineSample::is_identity() const {
  return !hflip && !vflip && rotation_deg == 0.0 && shear_deg == 0.0 && zoom == 1.0;
}

AffineSample sample_augment(const AugmentConfig& cfg, std::mt19937& rng) {
  cfg.validate();
  AffineSample s;
  // Draw order is part of the determinism contract: flips, rotation, shear, zoom.
  if (cfg.hflip) s.hflip = (rng() & 1u) != 0;
  if (cfg.vflip) s.vflip = (rng() & 1u) != 0;
  if (cfg.rotation_max_deg > 0) {
    const double u = double(rng()) * 0x1p-32;
    s.rotation_deg = (2.0 * u - 1.0) * cfg.rotation_max_deg;
  }
  if (cfg.shear_max_deg > 0) {
    const double u = double(rng()) * 0x1p-32;
    s.shear_deg = (2.0 * u - 1.0) * cfg.shear_max_deg;
  }
  if (cfg.zoom_lo != 1.0 || cfg.zoom_hi != 1.0) {
    const double u = double(rng()) * 0x1p-32;
    s.zoom = cfg.zoom_lo + u * (cfg.zoom_hi - cfg.zoom_lo);
  }
  return s;
}

TensorF apply_affine(const TensorF& img, const AffineSample& sample) {
  if (img.rank() != 3) throw Error("apply_affine expects [h,w,c], got " + shape_str(img.shape()));
  if (sample.is_identity()) return img;

  // Forward transform in centred (x right, y down) coordinates: flips, then
  // rotation, then shear, then zoom. Pixels are sampled through the inverse.
  Mat2 fwd;
  if (sample.hflip) fwd = multiply(Mat2{-1, 0, 0, 1}, fwd);
  if (sample.vflip) fwd = multiply(Mat2{1, 0, 0, -1}, fwd);
  if (sample.rotation_deg != 0.0) {
    const double a = sample.rotation_deg * kPi / 180.0;
    fwd = multiply(Mat2{std::cos(a), -std::sin(a), std::sin(a), std::cos(a)}, fwd);
  }
  if (sample.shear_deg != 0.0) {
    const double t = std::tan(sample.shear_deg * kPi / 180.0);
    fwd = multiply(Mat2{1, t, 0, 1}, fwd);
  }
  if (sample.zoom != 1.0) fwd = multiply(Mat2{sample.zoom, 0, 0, sample.zoom}, fwd);
  const Mat2 inv = inverse(fwd);

  const std::int64_t h = img.dim(0), w = img.dim(1), ch = img.dim(2);
  const double cy = double(h - 1) / 2.0, cx = double(w - 1) / 2.0;
  TensorF out(img.shape());
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      const double ox = double(x) - cx, oy = double(y) - cy;
      const double sx = inv.a * ox + inv.b * oy + cx;
      const double sy = inv.c * ox + inv.d * oy + cy;
      for (std::int64_t c = 0; c < ch; ++c)
        out(y, x, c) = std::clamp(sample_clamped(img, sy, sx, c), 0.0f, 1.0f);
    }
  }
  return out;
}

TensorF augment(const TensorF& img, const AugmentConfig& cfg, std::mt19937& rng) {
  return apply_affine(img, sample_augment(cfg, rng));
}

TensorF resize_bilinear(const TensorF& img, std::int64_t out_h, std::int64_t out_w) {
  if (img.rank() != 3)
    throw Error("resize_bilinear expects [h,w,c], got " + shape_str(img.shape()));
  if (out_h < 1 || out_w < 1) throw Error("resize_bilinear output extents must be >= 1");
  const std::int64_t h = img.dim(0), w = img.dim(1), ch = img.dim(2);
  if (h == out_h && w == out_w) return img;

  const double scale_y = double(h) / double(out_h);
  const double scale_x = double(w) / double(out_w);
  TensorF out({out_h, out_w, ch});
  for (std::int64_t i = 0; i < out_h; ++i) {
    const double sy = (double(i) + 0.5) * scale_y - 0.5;
    for (std::int64_t j = 0; j < out_w; ++j) {
      const double sx = (double(j) + 0.5) * scale_x - 0.5;
      for (std::int64_t c = 0; c < ch; ++c) out(i, j, c) = sample_clamped(img, sy, sx, c);
    }
  }
  return out;
}

}  // namespace histoconv
