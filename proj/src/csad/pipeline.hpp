#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "csad/bench.hpp"
#include "csad/fusion_calibration.hpp"
#include "csad/histogram_scoring.hpp"
#include "csad/lgst_scoring.hpp"
#include "csad/localization.hpp"
#include "csad/pseudo_label.hpp"
#include "csad/synth.hpp"

namespace csad {

struct FitConfig {
  std::vector<int> patch_sizes{256, 128};
  double validation_fraction = 0.2;
  RegularizationPolicy policy{};
  MapReduction reduction{};
};

// One JSON document with optional sections "synth", "labels", "fit", "score"
// and "bench"; missing keys keep their defaults.
struct PipelineConfig {
  std::uint64_t seed = 0;
  int jobs = 1;
  SceneSpec spec = SceneSpec::toy_loco();
  DatasetCounts counts{};
  LabelGenConfig labels{};
  std::string external_features;  // descriptor manifest; empty uses the builtin descriptor
  FitConfig fit{};
  std::string score_split = "test";
  BenchConfig bench{};
  nlohmann::json snapshot = nlohmann::json::object();

  static PipelineConfig from_json(const nlohmann::json& doc);
  static PipelineConfig parse(const std::string& text);
  static PipelineConfig load(const std::filesystem::path& path);
};

inline constexpr double kDefaultLabelBandwidth = 0.5;

Dataset run_synth(const PipelineConfig& cfg, const std::filesystem::path& out_dir);

struct LabelSummary {
  int n_cls = 0;
  std::vector<std::string> labeled;
  std::vector<std::string> unlabeled;
  bool fallback = false;
};

// Writes <out>/labels/<id>.pgm for every training image and <out>/split.json.
LabelSummary run_gen_labels(const PipelineConfig& cfg, const std::filesystem::path& dataset_dir,
                            const std::filesystem::path& out_dir);

// Exports rotated crops of the refined training masks for an external
// descriptor extractor.
void run_export_crops(const PipelineConfig& cfg, const std::filesystem::path& dataset_dir,
                      const std::filesystem::path& out_dir);

LabelSummary read_label_summary(const std::filesystem::path& labels_dir);

struct ImageScore {
  std::map<std::string, double> raw;
  std::map<std::string, double> normalized;
  double fused = 0.0;
};

class Model {
 public:
  static inline constexpr int kVersion = 1;

  int n_cls = 0;
  std::vector<int> patch_sizes;
  std::vector<HistogramBank> banks;  // parallel to patch_sizes
  CalibrationProfile profile;
  std::vector<std::uint16_t> class_of_archetype;  // oracle label -> pseudo class; entry 0 is background
  SceneSpec spec;
  MapReduction reduction;
  std::vector<LabelMap> train_maps;  // bank training maps, for deficit localization
  nlohmann::json config = nlohmann::json::object();

  static Model load(const std::filesystem::path& dir);
  void save(const std::filesystem::path& dir) const;

  static std::string hist_stream(int patch_size) { return "hist_" + std::to_string(patch_size); }
  bool has_lgst() const { return profile.streams.count("lgst") != 0; }

  // Oracle segmentation relabeled into pseudo classes.
  LabelMap segment(const Image& image) const;
  ImageScore score(const LabelMap& map, const LgstInputs* lgst) const;
  LocalizationResult localize(const LabelMap& map, const LgstInputs* lgst) const;
};

struct FitSummary {
  std::size_t fit_images = 0;
  std::size_t validation_images = 0;
  std::vector<std::string> streams;
};

FitSummary run_fit(const PipelineConfig& cfg, const std::filesystem::path& dataset_dir,
                   const std::filesystem::path& labels_dir, const std::filesystem::path& model_dir);

// What to score: either a dataset split, or explicit image / label-map files
// whose ids are the file stems.
struct ScoreInputs {
  std::filesystem::path dataset_dir;
  std::string split = "test";
  std::string id;  // with a dataset: only this entry, whatever its split
  std::vector<std::filesystem::path> images;
  std::vector<std::filesystem::path> label_maps;
  std::optional<std::filesystem::path> tensor_manifest;
  bool use_dataset_tensors = true;
};

struct ScoredImage {
  std::string id;
  std::string kind;
  ImageScore score;
};

nlohmann::json score_record(const ScoredImage& s);

std::vector<ScoredImage> run_score(const Model& model, const ScoreInputs& inputs, int jobs);

// Writes patch_hist, lgst and merged maps (16-bit PGM + JSON range) under out_dir.
LocalizationResult run_localize(const Model& model, const ScoreInputs& inputs, const std::filesystem::path& out_dir);

BenchReport run_bench(const Model& model, const ScoreInputs& inputs, const BenchConfig& cfg);

}  // namespace csad
