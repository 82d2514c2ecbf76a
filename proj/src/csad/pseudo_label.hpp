#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "csad/clustering.hpp"
#include "csad/component_features.hpp"
#include "csad/image.hpp"

namespace csad {

enum class LabelMode { kFineGrained, kCoarseGrained };

struct LabelGenConfig {
  LabelMode mode = LabelMode::kFineGrained;
  // Fine-grained only: apply filter-by-grounding before filter-by-combine when a
  // grounding mask is available.
  bool use_grounding = true;
  std::size_t alpha = 0;  // 0 selects ceil(N_train / 2)
  MeanShiftConfig meanshift{};
  std::optional<HdbscanConfig> hdbscan;  // unset: HdbscanConfig::defaults_for(n)
  int rotations = kDefaultRotations;
  bool fill_holes = true;
  int jobs = 1;
};

// Mask refinement by mode: fine-grained applies grounding (if given) then
// combine; coarse-grained passes masks through unchanged. Empty masks are dropped.
MaskSet refine_masks(const MaskSet& raw, const BinaryMask* grounding, const LabelGenConfig& cfg);

struct LabelGenResult {
  int n_cls = 0;
  std::vector<LabelMap> maps;
  // One entry per component in image-major order.
  std::vector<FeatureVector> descriptors;
  std::vector<std::pair<std::size_t, std::size_t>> component_source;  // (image, mask)
  ClusterAssignment clusters;  // after alpha filtering
};

// Descriptors come from `external` when given (keyed by image id and mask index),
// otherwise from the rotation-averaged feature function.
LabelGenResult generate_labels(const std::vector<Image>& images, const std::vector<MaskSet>& refined_masks,
                               const LabelGenConfig& cfg, const FeatureFunction& feature = builtin_descriptor,
                               const ExternalDescriptors* external = nullptr,
                               const std::vector<std::string>* image_ids = nullptr);

struct DatasetSplit {
  std::vector<std::size_t> labeled;
  std::vector<std::size_t> unlabeled;
  int n_cls = 0;
  bool fallback = false;  // clustering found no cluster; everything labeled
};

DatasetSplit filter_label_maps(const std::vector<LabelMap>& maps, int n_cls,
                               const std::optional<HdbscanConfig>& cfg = std::nullopt);

struct LsaConfig {
  double min_displacement = 0.1;  // fraction of max(W, H)
  int components_per_image = 1;
  int max_attempts = 100;
};

struct LsaResult {
  Image image;
  LabelMap map;
  BinaryMask pasted;  // union of pasted pixels in the output frame
  std::vector<std::uint16_t> classes;
  std::vector<double> displacement;  // per pasted component, in pixels
};

// Pastes random components of the source at random translations at least
// min_displacement * max(W, H) away from where they were. Deterministic in seed.
LsaResult lsa_augment(const Image& image, const LabelMap& map, const Image& source_image, const LabelMap& source_map,
                      const LsaConfig& cfg, std::uint64_t seed);

}  // namespace csad
