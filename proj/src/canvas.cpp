#include "histoconv/canvas.hpp"

#include <algorithm>
#include <cmath>

namespace histoconv {

Canvas::Canvas(std::int64_t width, std::int64_t height, Rgb background) {
  img_ = make_image_u8(height, width, 3);
  fill_rect(0, 0, width, height, background);
}

void Canvas::set_pixel(std::int64_t x, std::int64_t y, Rgb c) {
  if (x < 0 || y < 0 || x >= img_.width || y >= img_.height) return;
  img_.at(y, x, 0) = c.r;
  img_.at(y, x, 1) = c.g;
  img_.at(y, x, 2) = c.b;
}

void Canvas::fill_rect(std::int64_t x, std::int64_t y, std::int64_t w, std::int64_t h, Rgb c) {
  const std::int64_t x0 = std::max<std::int64_t>(x, 0);
  const std::int64_t y0 = std::max<std::int64_t>(y, 0);
  const std::int64_t x1 = std::min(x + w, img_.width);
  const std::int64_t y1 = std::min(y + h, img_.height);
  for (std::int64_t yy = y0; yy < y1; ++yy)
    for (std::int64_t xx = x0; xx < x1; ++xx) {
      img_.at(yy, xx, 0) = c.r;
      img_.at(yy, xx, 1) = c.g;
      img_.at(yy, xx, 2) = c.b;
    }
}

void Canvas::draw_line(std::int64_t x0, std::int64_t y0, std::int64_t x1, std::int64_t y1,
                       Rgb c) {
  // Bresenham, all octants
  const std::int64_t dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  const std::int64_t sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  std::int64_t err = dx + dy;
  for (;;) {
    set_pixel(x0, y0, c);
    if (x0 == x1 && y0 == y1) break;
    const std::int64_t e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void Canvas::draw_text(std::int64_t x, std::int64_t y, const std::string& text, Rgb c,
                       int scale) {
  std::int64_t cx = x;
  for (char ch : text) {
    const std::uint8_t* rows = glyph5x7(ch);
    for (int ry = 0; ry < 7; ++ry)
      for (int rx = 0; rx < 5; ++rx)
        if (rows[ry] & (1u << (4 - rx)))
          fill_rect(cx + rx * scale, y + ry * scale, scale, scale, c);
    cx += 6 * scale;  // 5 columns + 1 gap
  }
}

std::int64_t Canvas::text_width(std::size_t chars, int scale) {
  if (chars == 0) return 0;
  return std::int64_t(chars) * 6 * scale - scale;
}

}  // namespace histoconv
