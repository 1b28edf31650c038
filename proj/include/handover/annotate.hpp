#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>

#include "handover/error.hpp"
#include "handover/raster.hpp"
#include "handover/region_grounding.hpp"

namespace handover {

namespace font_detail {

// Classic 5x7 digit bitmaps, one byte per row, low 5 bits used.
inline const std::array<std::array<std::uint8_t, 7>, 10>& digit_font() {
  static const std::array<std::array<std::uint8_t, 7>, 10> font = {{
      {0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e},  // 0
      {0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e},  // 1
      {0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f},  // 2
      {0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e},  // 3
      {0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02},  // 4
      {0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e},  // 5
      {0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e},  // 6
      {0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},  // 7
      {0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e},  // 8
      {0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c},  // 9
  }};
  return font;
}

inline void fill_rect(Image& img, int x, int y, int w, int h, std::uint8_t r, std::uint8_t g,
                      std::uint8_t b) {
  for (int v = y; v < y + h; ++v)
    for (int u = x; u < x + w; ++u) img.set(u, v, r, g, b);
}

inline void draw_digits(Image& img, const std::string& digits, int x, int y, int scale,
                        std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const auto& font = digit_font();
  for (std::size_t i = 0; i < digits.size(); ++i) {
    int d = digits[i] - '0';
    int gx = x + static_cast<int>(i) * 6 * scale;
    for (int row = 0; row < 7; ++row)
      for (int col = 0; col < 5; ++col)
        if (font[static_cast<std::size_t>(d)][static_cast<std::size_t>(row)] & (1 << (4 - col)))
          fill_rect(img, gx + col * scale, y + row * scale, scale, scale, r, g, b);
  }
}

}  // namespace font_detail

struct AnnotationStyle {
  std::array<std::uint8_t, 3> grid_color{0, 255, 0};
  std::array<std::uint8_t, 3> tag_background{32, 32, 32};
  std::array<std::uint8_t, 3> tag_text{255, 255, 255};
  int inset = 2;  // label offset from the cell's top-left corner
};

// Overlay the labeled grid on a copy of the image: 1 px cell borders plus a
// numeric tag per cell (5x7 digit font scaled to roughly 1/5 cell height on
// a filled dark background).
inline Image annotate_image(const Image& image, const GridSpec& grid,
                            const AnnotationStyle& style = {}) {
  require(grid.bbox[0] >= 0 && grid.bbox[1] >= 0 &&
              grid.bbox[0] + grid.bbox[2] <= image.width &&
              grid.bbox[1] + grid.bbox[3] <= image.height,
          errc::invalid_argument, "grid does not lie within image bounds");

  Image out = image;
  for (const auto& cell : grid.cells) {
    auto [x, y, w, h] = cell.rect;
    for (int u = x; u < x + w; ++u) {
      out.set(u, y, style.grid_color[0], style.grid_color[1], style.grid_color[2]);
      out.set(u, y + h - 1, style.grid_color[0], style.grid_color[1], style.grid_color[2]);
    }
    for (int v = y; v < y + h; ++v) {
      out.set(x, v, style.grid_color[0], style.grid_color[1], style.grid_color[2]);
      out.set(x + w - 1, v, style.grid_color[0], style.grid_color[1], style.grid_color[2]);
    }

    int scale = std::max(1, h / 35);  // 7*scale glyph height ~ h/5
    std::string digits = std::to_string(cell.label);
    int tw = (static_cast<int>(digits.size()) * 6 - 1) * scale;
    int th = 7 * scale;
    int tx = x + style.inset;
    int ty = y + style.inset;
    font_detail::fill_rect(out, tx - 1, ty - 1, tw + 2, th + 2, style.tag_background[0],
                           style.tag_background[1], style.tag_background[2]);
    font_detail::draw_digits(out, digits, tx, ty, scale, style.tag_text[0], style.tag_text[1],
                             style.tag_text[2]);
  }
  return out;
}

}  // namespace handover
