#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "csad/error.hpp"

namespace csad {

// Interleaved 8-bit RGB image, row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::uint8_t* at(int x, int y) { return &rgb[(static_cast<std::size_t>(y) * width + x) * 3]; }
  const std::uint8_t* at(int x, int y) const { return &rgb[(static_cast<std::size_t>(y) * width + x) * 3]; }
};

// Per-pixel class index. 0 is background; classes 1..N_cls.
struct LabelMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> pixels;

  LabelMap() = default;
  LabelMap(int w, int h, std::uint16_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  std::size_t pixel_count() const { return pixels.size(); }
  std::uint16_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint16_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint16_t max_class() const;
};

struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;  // 0 or 1

  BinaryMask() = default;
  BinaryMask(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

  std::size_t pixel_count() const { return bits.size(); }
  std::uint8_t& at(int x, int y) { return bits[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x]; }
  std::size_t area() const;
  bool same_shape(const BinaryMask& o) const { return width == o.width && height == o.height; }
};

using MaskSet = std::vector<BinaryMask>;

// Nonnegative real-valued map, row-major.
struct AnomalyMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  AnomalyMap() = default;
  AnomalyMap(int w, int h) : width(w), height(h), values(static_cast<std::size_t>(w) * h, 0.0) {}

  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
  double sum() const;
  double max() const;
};

// Bilinear resize, sample positions at pixel centers.
AnomalyMap resize_bilinear(const AnomalyMap& m, int width, int height);

}  // namespace csad
