#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "csad/image.hpp"
#include "csad/lgst_scoring.hpp"

namespace csad {

enum class Shape { kDisk, kSquare, kBar, kTriangle };

using Rgb = std::array<std::uint8_t, 3>;

struct Archetype {
  std::string name;
  Shape shape = Shape::kDisk;
  Rgb color{255, 0, 0};
  int count = 1;
  int home_cell = 0;   // row-major index into the home grid
  double size = 40.0;  // characteristic extent in pixels
  double rotation_range = 360.0;  // rotations are drawn uniformly from +-range/2 degrees
};

struct SceneSpec {
  int width = 256;
  int height = 256;
  int home_grid = 2;  // home cells form a home_grid x home_grid layout
  Rgb background{24, 24, 24};
  std::vector<Archetype> archetypes;
  double jitter = 3.0;        // positional noise sigma, pixels
  double size_jitter = 0.0;   // relative size noise sigma
  double color_noise = 0.0;   // per-pixel sigma in 0..255 units
  std::uint64_t seed = 0;
  // synthetic LGST feature tensors
  int tensor_channels = 8;
  int tensor_size = 16;

  // Four archetypes (disk, square, bar, triangle), one per quadrant.
  static SceneSpec toy_loco();
  // One red disk and one blue square per image.
  static SceneSpec two_archetypes();

  nlohmann::json to_json() const;
  static SceneSpec from_json(const nlohmann::json& j);
};

enum class AnomalyKind { kNone, kMissingComponent, kExtraComponent, kSwappedPositions, kStructuralDefect };

const char* anomaly_kind_name(AnomalyKind kind);
AnomalyKind anomaly_kind_from_name(const std::string& name);

struct Instance {
  int archetype = 0;
  double cx = 0, cy = 0;
  double size = 0;
  double rotation_deg = 0;
};

struct Scene {
  Image image;
  LabelMap labels;               // archetype index + 1; exact oracle segmentation
  BinaryMask anomaly_mask;       // ground-truth anomalous pixels (empty for normal scenes)
  std::vector<Instance> instances;
  std::vector<BinaryMask> instance_masks;
  AnomalyKind kind = AnomalyKind::kNone;
  // Missing: footprint of the removed instance. Extra: the added instance.
  // Swapped: both swapped archetypes at their new positions. Structural: the bite.
  int implicated_archetype = -1;
};

// Renders one scene from an independent per-scene seed.
Scene generate_scene(const SceneSpec& spec, AnomalyKind kind, std::uint64_t scene_seed);

// Nearest-color classification over background and archetype colors.
LabelMap oracle_segment(const Image& image, const SceneSpec& spec);

struct DatasetCounts {
  int n_train = 100;
  int n_test_normal = 50;
  int n_test_anomalous = 50;  // per kind
  std::vector<AnomalyKind> kinds{AnomalyKind::kMissingComponent, AnomalyKind::kExtraComponent,
                                 AnomalyKind::kSwappedPositions, AnomalyKind::kStructuralDefect};
  bool write_tensors = true;
  bool write_proposals = true;
};

struct DatasetEntry {
  std::string id;
  std::string split;  // "train" or "test"
  AnomalyKind kind = AnomalyKind::kNone;
  std::string image;
  std::string label;
  std::string mask;
  std::string proposals;
  std::string grounding;
};

struct Dataset {
  std::filesystem::path root;
  SceneSpec spec;
  std::vector<DatasetEntry> entries;

  static Dataset load(const std::filesystem::path& root);
  std::vector<const DatasetEntry*> select(const std::string& split) const;
  std::filesystem::path path(const std::string& rel) const { return root / rel; }
  std::optional<std::filesystem::path> tensor_manifest() const;
};

// Writes images/, labels/, masks/, proposals/, grounding/, tensors/ and
// manifest.json under dir. Deterministic in spec.seed.
Dataset generate_dataset(const SceneSpec& spec, const DatasetCounts& counts, const std::filesystem::path& dir,
                         int jobs = 1);

// Synthetic teacher/student tensors: teacher is a fixed random projection of the
// pooled image; students match it up to small noise except inside the anomaly mask.
LgstInputs synth_lgst_tensors(const Scene& scene, const SceneSpec& spec, std::uint64_t scene_seed);

// Mann-Whitney probability that an anomalous score exceeds a normal one; ties 1/2.
double auroc(const std::vector<double>& normal_scores, const std::vector<double>& anomalous_scores);

}  // namespace csad
