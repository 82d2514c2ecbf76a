#pragma once

// Interchange formats shared with the extractor sidecar.
//
//   tensor (.cstf): "CSTF" | u32 version=1 | u32 ndim | ndim x u32 dims | f32 payload
//                   all little-endian, payload row-major; no trailing bytes.
//   label map:      binary PGM (P5), maxval 255, one byte per pixel = class index.
//   mask set:       directory with manifest.json {"width","height","masks":[files]}
//                   and one P5 PGM per mask (0 / 255).
//   image:          binary PPM (P6), maxval 255.
//   anomaly map:    16-bit binary PGM (P5, maxval 65535, big-endian samples)
//                   plus a JSON sidecar {"min","max"} for rescaling.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "csad/image.hpp"

namespace csad {

struct Tensor {
  std::vector<std::uint32_t> shape;
  std::vector<float> data;

  Tensor() = default;
  Tensor(std::vector<std::uint32_t> dims, std::vector<float> values);
  // Zero-filled C x H x W feature tensor.
  static Tensor zeros(std::uint32_t channels, std::uint32_t height, std::uint32_t width);

  std::size_t element_count() const;
  bool is_chw() const { return shape.size() == 3; }
  std::uint32_t channels() const;
  std::uint32_t height() const;
  std::uint32_t width() const;
  float& at(std::uint32_t c, std::uint32_t y, std::uint32_t x) {
    return data[(static_cast<std::size_t>(c) * height() + y) * width() + x];
  }
  float at(std::uint32_t c, std::uint32_t y, std::uint32_t x) const {
    return data[(static_cast<std::size_t>(c) * height() + y) * width() + x];
  }
};

inline constexpr std::uint32_t kTensorVersion = 1;

std::vector<std::uint8_t> encode_tensor(const Tensor& t);
Tensor decode_tensor(const std::vector<std::uint8_t>& bytes);
Tensor read_tensor(const std::filesystem::path& path);
void write_tensor(const Tensor& t, const std::filesystem::path& path);

LabelMap read_label_map(const std::filesystem::path& path);
void write_label_map(const LabelMap& map, const std::filesystem::path& path);

BinaryMask read_mask(const std::filesystem::path& path);
void write_mask(const BinaryMask& mask, const std::filesystem::path& path);

// Writes masks as mask_000.pgm, mask_001.pgm, ... plus manifest.json.
void write_mask_set(const MaskSet& masks, const std::filesystem::path& dir);
MaskSet read_mask_set(const std::filesystem::path& dir);

Image read_image(const std::filesystem::path& path);
void write_image(const Image& image, const std::filesystem::path& path);

struct MapRange {
  double min = 0.0;
  double max = 0.0;
};

// Linear quantization of [min, max] onto 0..65535.
MapRange write_anomaly_map(const AnomalyMap& map, const std::filesystem::path& pgm_path,
                           const std::filesystem::path& json_path);
AnomalyMap read_anomaly_map(const std::filesystem::path& pgm_path, const std::filesystem::path& json_path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace csad
