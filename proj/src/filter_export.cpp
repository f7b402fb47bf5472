#include "histoconv/filter_export.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>

namespace histoconv {

namespace {

constexpr std::int64_t kGridColumns = 8;
constexpr std::int64_t kGridGap = 2;        // between tiles and around the border
constexpr std::int64_t kRgbCell = 16;       // pixels per weight for 3-channel tiles
constexpr std::int64_t kGrayCell = 6;       // pixels per weight for per-channel patches
constexpr std::int64_t kMosaicGap = 1;      // between patches inside one tile
constexpr std::uint8_t kGapShade = 0;       // black separators

struct FilterScale {
  float lo = 0.0f;
  float inv_range = 0.0f;  // 0 signals a constant filter -> mid gray
};

FilterScale filter_scale(const Tensor<float>& w, std::int64_t f) {
  const auto& s = w.shape();
  float lo = w(0, 0, 0, f), hi = lo;
  for (std::int64_t ky = 0; ky < s[0]; ++ky)
    for (std::int64_t kx = 0; kx < s[1]; ++kx)
      for (std::int64_t c = 0; c < s[2]; ++c) {
        const float v = w(ky, kx, c, f);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  FilterScale out;
  out.lo = lo;
  out.inv_range = hi > lo ? 1.0f / (hi - lo) : 0.0f;
  return out;
}

std::uint8_t shade(float v, const FilterScale& sc) {
  if (sc.inv_range == 0.0f) return 128;
  const float t = (v - sc.lo) * sc.inv_range;
  return std::uint8_t(std::lround(std::clamp(t, 0.0f, 1.0f) * 255.0f));
}

void fill_block(ImageU8& img, std::int64_t y0, std::int64_t x0, std::int64_t side,
                std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  for (std::int64_t y = y0; y < y0 + side; ++y)
    for (std::int64_t x = x0; x < x0 + side; ++x) {
      img.at(y, x, 0) = r;
      img.at(y, x, 1) = g;
      img.at(y, x, 2) = b;
    }
}

// RGB tile for a 3-input-channel filter: one 16x16 block per weight cell.
void paint_rgb_tile(ImageU8& img, std::int64_t y0, std::int64_t x0, const Tensor<float>& w,
                    std::int64_t f, const FilterScale& sc) {
  const auto& s = w.shape();
  for (std::int64_t ky = 0; ky < s[0]; ++ky)
    for (std::int64_t kx = 0; kx < s[1]; ++kx)
      fill_block(img, y0 + ky * kRgbCell, x0 + kx * kRgbCell, kRgbCell,
                 shade(w(ky, kx, 0, f), sc), shade(w(ky, kx, 1, f), sc),
                 shade(w(ky, kx, 2, f), sc));
}

// Grayscale mosaic tile: one patch per input channel, near-square layout.
void paint_mosaic_tile(ImageU8& img, std::int64_t y0, std::int64_t x0, const Tensor<float>& w,
                       std::int64_t f, const FilterScale& sc, std::int64_t mosaic_cols) {
  const auto& s = w.shape();
  const std::int64_t patch_h = s[0] * kGrayCell, patch_w = s[1] * kGrayCell;
  for (std::int64_t c = 0; c < s[2]; ++c) {
    const std::int64_t py = y0 + (c / mosaic_cols) * (patch_h + kMosaicGap);
    const std::int64_t px = x0 + (c % mosaic_cols) * (patch_w + kMosaicGap);
    for (std::int64_t ky = 0; ky < s[0]; ++ky)
      for (std::int64_t kx = 0; kx < s[1]; ++kx) {
        const std::uint8_t g = shade(w(ky, kx, c, f), sc);
        fill_block(img, py + ky * kGrayCell, px + kx * kGrayCell, kGrayCell, g, g, g);
      }
  }
}

}  // namespace

ImageU8 render_filter_grid(const Tensor<float>& weights) {
  const auto& s = weights.shape();
  if (s.size() != 4)
    throw Error("filter grid expects [kh,kw,in_c,filters] weights, got rank " +
                std::to_string(s.size()));
  const std::int64_t kh = s[0], kw = s[1], in_c = s[2], filters = s[3];
  if (kh < 1 || kw < 1 || in_c < 1 || filters < 1)
    throw Error("filter grid requires non-empty weights");

  const bool rgb = in_c == 3;
  std::int64_t tile_h = 0, tile_w = 0, mosaic_cols = 0;
  if (rgb) {
    tile_h = kh * kRgbCell;
    tile_w = kw * kRgbCell;
  } else {
    mosaic_cols = std::int64_t(std::ceil(std::sqrt(double(in_c))));
    const std::int64_t mosaic_rows = (in_c + mosaic_cols - 1) / mosaic_cols;
    tile_h = mosaic_rows * kh * kGrayCell + (mosaic_rows - 1) * kMosaicGap;
    tile_w = mosaic_cols * kw * kGrayCell + (mosaic_cols - 1) * kMosaicGap;
  }

  const std::int64_t cols = std::min(kGridColumns, filters);
  const std::int64_t rows = (filters + cols - 1) / cols;
  const std::int64_t width = cols * tile_w + (cols + 1) * kGridGap;
  const std::int64_t height = rows * tile_h + (rows + 1) * kGridGap;

  ImageU8 img = make_image_u8(height, width, 3);
  std::fill(img.pixels.begin(), img.pixels.end(), kGapShade);

  for (std::int64_t f = 0; f < filters; ++f) {
    const FilterScale sc = filter_scale(weights, f);
    const std::int64_t y0 = kGridGap + (f / cols) * (tile_h + kGridGap);
    const std::int64_t x0 = kGridGap + (f % cols) * (tile_w + kGridGap);
    if (rgb)
      paint_rgb_tile(img, y0, x0, weights, f, sc);
    else
      paint_mosaic_tile(img, y0, x0, weights, f, sc, mosaic_cols);
  }
  return img;
}

std::vector<std::string> export_filters(const Model<float>& model, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> written;
  std::int64_t conv_ordinal = 0;
  for (std::size_t i = 0; i < model.spec.layers.size(); ++i) {
    if (model.spec.layers[i].kind != LayerKind::conv) continue;
    ++conv_ordinal;
    const auto& weights = model.params[std::size_t(model.layer_param_base[i])];
    const auto path =
        (std::filesystem::path(out_dir) /
         ("filters_conv" + std::to_string(conv_ordinal) + ".png"))
            .string();
    write_png(path, render_filter_grid(weights));
    written.push_back(path);
  }
  if (written.empty()) throw Error("model has no convolution layers to export");
  return written;
}

}  // namespace histoconv
