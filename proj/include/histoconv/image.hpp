#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "histoconv/tensor.hpp"

namespace histoconv {

// Interleaved 8-bit image, row-major; channels is 1 (gray) or 3 (RGB).
struct ImageU8 {
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::int64_t channels = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t& at(std::int64_t y, std::int64_t x, std::int64_t c) {
    return pixels[std::size_t((y * width + x) * channels + c)];
  }
  std::uint8_t at(std::int64_t y, std::int64_t x, std::int64_t c) const {
    return pixels[std::size_t((y * width + x) * channels + c)];
  }
};

ImageU8 make_image_u8(std::int64_t height, std::int64_t width, std::int64_t channels);

// Decodes a JPEG or PNG file (sniffed by magic bytes) to interleaved RGB.
// Grayscale sources are promoted to three channels; alpha is dropped.
ImageU8 read_image_rgb8(const std::string& path);

void write_png(const std::string& path, const ImageU8& img);

// read_image_rgb8 followed by the x/255 map into [0,1]; result is [h,w,3].
TensorF load_image(const std::string& path);

// Quantizes a [h,w,3] tensor of values in [0,1] back to 8-bit RGB (rounding).
ImageU8 to_image_u8(const TensorF& img);

}  // namespace histoconv
