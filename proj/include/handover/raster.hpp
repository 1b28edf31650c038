#pragma once

#include <cstdint>
#include <vector>

#include "handover/error.hpp"

namespace handover {

// 8-bit RGB raster, row-major, tightly packed.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // 3 * width * height

  Image() = default;
  Image(int w, int h, std::uint8_t r = 0, std::uint8_t g = 0, std::uint8_t b = 0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3) {
    require(w > 0 && h > 0, errc::invalid_argument, "image dimensions must be positive");
    for (std::size_t i = 0; i < data.size(); i += 3) {
      data[i] = r;
      data[i + 1] = g;
      data[i + 2] = b;
    }
  }

  bool in_bounds(int u, int v) const { return u >= 0 && u < width && v >= 0 && v < height; }

  std::uint8_t* px(int u, int v) { return data.data() + 3 * (static_cast<std::size_t>(v) * width + u); }
  const std::uint8_t* px(int u, int v) const {
    return data.data() + 3 * (static_cast<std::size_t>(v) * width + u);
  }

  void set(int u, int v, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    if (!in_bounds(u, v)) return;
    auto* p = px(u, v);
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }
};

struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // 0 or 1

  BinaryMask() = default;
  BinaryMask(int w, int h, bool value = false)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, value ? 1 : 0) {
    require(w > 0 && h > 0, errc::invalid_argument, "mask dimensions must be positive");
  }

  bool in_bounds(int u, int v) const { return u >= 0 && u < width && v >= 0 && v < height; }

  bool at(int u, int v) const { return data[static_cast<std::size_t>(v) * width + u] != 0; }
  void set(int u, int v, bool value) {
    if (in_bounds(u, v)) data[static_cast<std::size_t>(v) * width + u] = value ? 1 : 0;
  }

  std::size_t count_true() const {
    std::size_t n = 0;
    for (auto b : data) n += b;
    return n;
  }
};

// 16-bit depth raster; raw value 0 means invalid/missing.
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> data;

  DepthImage() = default;
  DepthImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0) {
    require(w > 0 && h > 0, errc::invalid_argument, "depth dimensions must be positive");
  }

  std::uint16_t at(int u, int v) const { return data[static_cast<std::size_t>(v) * width + u]; }
  void set(int u, int v, std::uint16_t d) {
    data[static_cast<std::size_t>(v) * width + u] = d;
  }
};

}  // namespace handover
