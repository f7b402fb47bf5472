#pragma once

#include <cstdint>
#include <string>

#include "histoconv/image.hpp"

namespace histoconv {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
};

// Rows of the 5x7 bitmap glyph for c (lowercased); bit 4 is the left column.
// Unknown characters render as a hollow box.
const std::uint8_t* glyph5x7(char c);

// Minimal raster canvas used for plot and filter-grid rendering. Coordinates
// are (x right, y down); out-of-bounds drawing is clipped.
class Canvas {
 public:
  Canvas(std::int64_t width, std::int64_t height, Rgb background);

  std::int64_t width() const { return img_.width; }
  std::int64_t height() const { return img_.height; }

  void set_pixel(std::int64_t x, std::int64_t y, Rgb c);
  void fill_rect(std::int64_t x, std::int64_t y, std::int64_t w, std::int64_t h, Rgb c);
  void draw_line(std::int64_t x0, std::int64_t y0, std::int64_t x1, std::int64_t y1, Rgb c);

  // Top-left anchored; glyphs are 5x7 with a 1-column advance gap, all scaled.
  void draw_text(std::int64_t x, std::int64_t y, const std::string& text, Rgb c, int scale = 1);
  static std::int64_t text_width(std::size_t chars, int scale = 1);
  static std::int64_t text_height(int scale = 1) { return 7 * scale; }

  const ImageU8& image() const { return img_; }
  void save_png(const std::string& path) const { write_png(path, img_); }

 private:
  ImageU8 img_;
};

}  // namespace histoconv
