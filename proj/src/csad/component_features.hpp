#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "csad/image.hpp"
#include "csad/mask_ops.hpp"

namespace csad {

using FeatureVector = std::vector<double>;
using FeatureFunction = std::function<FeatureVector(const ComponentCrop&)>;

inline constexpr int kDefaultRotations = 60;
inline constexpr std::size_t kBuiltinDescriptorDim = 32;
inline constexpr int kColorBins = 8;

struct ComponentDescriptor {
  FeatureVector vector;
  std::size_t component_id = 0;
  std::string image_id;
};

// Seven Hu moment invariants of a binary mask (translation, scale and rotation
// invariant), computed from normalized central moments.
std::array<double, 7> hu_moments(const std::vector<std::uint8_t>& bits, int width, int height);

// Analytic descriptor: 8-bin color histogram per channel over component pixels (24),
// component area fraction of the patch (1), Hu moments of the crop mask (7).
FeatureVector builtin_descriptor(const ComponentCrop& crop);

// Mean of f over crops rotated by 360*r/R for r = 0..R-1.
FeatureVector rotation_invariant_descriptor(const Image& image, const BinaryMask& mask, const FeatureFunction& f,
                                            int rotations = kDefaultRotations);

// Crops exported for an external feature extractor. Each crop is written as a
// PPM (component pixels only) and listed in crops/manifest.json with its image
// id, component index and rotation index.
struct CropRequest {
  std::string image_id;
  std::size_t component = 0;
  const Image* image = nullptr;
  const BinaryMask* mask = nullptr;
};
void export_crops(const std::vector<CropRequest>& requests, int rotations, const std::filesystem::path& dir);

// Per-crop vectors produced externally. The manifest lists entries
// {"image","component","rotation","file"} pointing at 1-D (or C x 1 x 1) tensors.
// Vectors are averaged over rotations here, so the result is keyed per component.
using ExternalDescriptors = std::map<std::pair<std::string, std::size_t>, FeatureVector>;
ExternalDescriptors load_external_descriptors(const std::filesystem::path& manifest_path);

}  // namespace csad
