#include "csad/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>
#include <set>

#include "csad/mask_ops.hpp"
#include "csad/parallel.hpp"
#include "csad/tensor_io.hpp"

namespace csad {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

template <typename T>
T get_or(const json& section, const char* key, T fallback) {
  if (!section.contains(key)) return fallback;
  try {
    return section.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfig, std::string("config key '") + key + "': " + e.what());
  }
}

json section_of(const json& doc, const char* name) {
  if (!doc.contains(name)) return json::object();
  if (!doc.at(name).is_object()) fail(ErrorCode::kConfig, std::string("config section '") + name + "' must be an object");
  return doc.at(name);
}

LabelMode parse_mode(const std::string& s) {
  if (s == "fine" || s == "fine_grained") return LabelMode::kFineGrained;
  if (s == "coarse" || s == "coarse_grained") return LabelMode::kCoarseGrained;
  fail(ErrorCode::kConfig, "labels.mode must be 'fine' or 'coarse', got '" + s + "'");
}

void require_positive(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::kConfig, what);
}

std::vector<std::string> id_list(const json& j) {
  std::vector<std::string> out;
  for (const auto& v : j) out.push_back(v.get<std::string>());
  return out;
}

// Loads the training images of a dataset in manifest order.
struct TrainSet {
  Dataset dataset;
  std::vector<const DatasetEntry*> entries;
  std::vector<Image> images;
};

TrainSet load_train_set(const fs::path& dataset_dir, int jobs) {
  TrainSet t;
  t.dataset = Dataset::load(dataset_dir);
  t.entries = t.dataset.select("train");
  if (t.entries.empty()) fail(ErrorCode::kEmptyInput, "dataset has no training images");
  t.images.resize(t.entries.size());
  parallel_for(t.entries.size(), jobs, [&](std::size_t i) { t.images[i] = read_image(t.dataset.path(t.entries[i]->image)); });
  return t;
}

std::vector<MaskSet> refined_training_masks(const PipelineConfig& cfg, const TrainSet& t) {
  std::vector<MaskSet> refined(t.entries.size());
  parallel_for(t.entries.size(), cfg.jobs, [&](std::size_t i) {
    const auto& e = *t.entries[i];
    MaskSet raw;
    std::optional<BinaryMask> grounding;
    if (!e.proposals.empty()) {
      raw = read_mask_set(t.dataset.path(e.proposals));
      if (!e.grounding.empty()) grounding = read_mask(t.dataset.path(e.grounding));
    } else {
      // no proposal masks on disk: fall back to components of the oracle segmentation
      for (auto& c : all_components(oracle_segment(t.images[i], t.dataset.spec))) raw.push_back(std::move(c.mask));
    }
    refined[i] = refine_masks(raw, grounding ? &*grounding : nullptr, cfg.labels);
  });
  return refined;
}

struct InputItem {
  std::string id;
  std::string kind;
  fs::path image;
  fs::path label_map;
};

struct ResolvedInputs {
  std::vector<InputItem> items;
  std::optional<LgstManifest> tensors;
};

ResolvedInputs resolve_inputs(const Model& model, const ScoreInputs& in) {
  ResolvedInputs r;
  std::optional<Dataset> ds;
  if (!in.images.empty()) {
    for (const auto& p : in.images) r.items.push_back({p.stem().string(), "", p, {}});
  } else if (!in.label_maps.empty()) {
    for (const auto& p : in.label_maps) r.items.push_back({p.stem().string(), "", {}, p});
  } else if (!in.dataset_dir.empty()) {
    ds = Dataset::load(in.dataset_dir);
    for (const auto& e : ds->entries) {
      if (in.id.empty() ? (in.split == "all" || e.split == in.split) : e.id == in.id) {
        r.items.push_back({e.id, anomaly_kind_name(e.kind), ds->path(e.image), {}});
      }
    }
  }
  if (r.items.empty()) {
    fail(ErrorCode::kMissingInput, in.id.empty() ? "no images or label maps to process" : "no dataset entry " + in.id);
  }
  for (const auto& it : r.items) {
    const fs::path& p = it.image.empty() ? it.label_map : it.image;
    if (!fs::exists(p)) fail(ErrorCode::kMissingInput, "input not found: " + p.string());
  }

  if (in.tensor_manifest) {
    r.tensors = LgstManifest::load(*in.tensor_manifest);
  } else if (ds && in.use_dataset_tensors) {
    if (auto m = ds->tensor_manifest()) r.tensors = LgstManifest::load(*m);
  }
  if (model.has_lgst() && !r.tensors) {
    std::cerr << "warning: no LGST tensor manifest; scoring with patch histograms only\n";
  }
  if (r.tensors && model.has_lgst()) {
    for (const auto& it : r.items) {
      if (!r.tensors->contains(it.id)) fail(ErrorCode::kMissingInput, "tensor manifest has no entry for " + it.id);
    }
  } else {
    r.tensors.reset();
  }
  return r;
}

LabelMap map_for(const Model& model, const InputItem& item) {
  if (!item.label_map.empty()) return read_label_map(item.label_map);
  return model.segment(read_image(item.image));
}

std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  // Fisher-Yates with our own index draws keeps the order identical across standard libraries
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const json& doc) {
  if (!doc.is_object()) fail(ErrorCode::kConfig, "config must be a JSON object");
  static const std::set<std::string> kKnown{"seed", "jobs", "synth", "labels", "fit", "score", "bench"};
  for (const auto& [key, _] : doc.items()) {
    if (!kKnown.count(key)) fail(ErrorCode::kConfig, "unknown config key '" + key + "'");
  }
  PipelineConfig c;
  c.snapshot = doc;
  c.seed = get_or<std::uint64_t>(doc, "seed", 0);
  c.jobs = get_or<int>(doc, "jobs", 1);
  require_positive(c.jobs >= 1, "jobs must be >= 1");

  const json synth = section_of(doc, "synth");
  const std::string preset = get_or<std::string>(synth, "preset", "toy_loco");
  if (preset == "toy_loco") {
    c.spec = SceneSpec::toy_loco();
  } else if (preset == "two_archetypes") {
    c.spec = SceneSpec::two_archetypes();
  } else {
    fail(ErrorCode::kConfig, "synth.preset must be 'toy_loco' or 'two_archetypes'");
  }
  if (synth.contains("spec")) {
    json merged = c.spec.to_json();
    merged.merge_patch(synth.at("spec"));
    c.spec = SceneSpec::from_json(merged);
  }
  c.spec.seed = c.seed;
  c.counts.n_train = get_or<int>(synth, "n_train", c.counts.n_train);
  c.counts.n_test_normal = get_or<int>(synth, "n_test_normal", c.counts.n_test_normal);
  c.counts.n_test_anomalous = get_or<int>(synth, "n_test_anomalous", c.counts.n_test_anomalous);
  require_positive(c.counts.n_train >= 0 && c.counts.n_test_normal >= 0 && c.counts.n_test_anomalous >= 0,
                   "synth counts must be >= 0");
  if (synth.contains("kinds")) {
    c.counts.kinds.clear();
    for (const auto& k : synth.at("kinds")) c.counts.kinds.push_back(anomaly_kind_from_name(k.get<std::string>()));
  }
  c.counts.write_tensors = get_or<bool>(synth, "tensors", true);
  c.counts.write_proposals = get_or<bool>(synth, "proposals", true);

  const json labels = section_of(doc, "labels");
  c.labels.mode = parse_mode(get_or<std::string>(labels, "mode", "fine"));
  c.labels.use_grounding = get_or<bool>(labels, "use_grounding", true);
  c.labels.alpha = get_or<std::size_t>(labels, "alpha", 0);
  c.labels.meanshift.bandwidth = get_or<double>(labels, "bandwidth", kDefaultLabelBandwidth);
  require_positive(c.labels.meanshift.bandwidth > 0, "labels.bandwidth must be > 0");
  c.labels.meanshift.max_iter = get_or<int>(labels, "max_iter", 300);
  c.labels.rotations = get_or<int>(labels, "rotations", kDefaultRotations);
  require_positive(c.labels.rotations >= 1, "labels.rotations must be >= 1");
  c.labels.fill_holes = get_or<bool>(labels, "fill_holes", true);
  c.labels.jobs = c.jobs;
  if (labels.contains("hdbscan")) {
    const json& h = labels.at("hdbscan");
    HdbscanConfig hc;
    hc.min_cluster_size = get_or<std::size_t>(h, "min_cluster_size", hc.min_cluster_size);
    hc.min_samples = get_or<std::size_t>(h, "min_samples", hc.min_cluster_size);
    hc.outlier_factor = get_or<double>(h, "outlier_factor", hc.outlier_factor);
    require_positive(hc.min_cluster_size >= 2 && hc.min_samples >= 1, "labels.hdbscan sizes too small");
    c.labels.hdbscan = hc;
  }
  c.external_features = get_or<std::string>(labels, "external_features", "");

  const json fit = section_of(doc, "fit");
  c.fit.patch_sizes = get_or<std::vector<int>>(fit, "patch_sizes", c.fit.patch_sizes);
  require_positive(!c.fit.patch_sizes.empty(), "fit.patch_sizes must not be empty");
  for (int s : c.fit.patch_sizes) require_positive(s > 0, "fit.patch_sizes must be positive");
  c.fit.validation_fraction = get_or<double>(fit, "validation_fraction", c.fit.validation_fraction);
  require_positive(c.fit.validation_fraction > 0 && c.fit.validation_fraction < 1,
                   "fit.validation_fraction must be in (0, 1)");
  c.fit.policy.eps = get_or<double>(fit, "eps", c.fit.policy.eps);
  c.fit.policy.eps_abs = get_or<double>(fit, "eps_abs", c.fit.policy.eps_abs);
  require_positive(c.fit.policy.eps >= 0 && c.fit.policy.eps_abs > 0, "fit.eps must be >= 0 and fit.eps_abs > 0");
  const std::string reduction = get_or<std::string>(fit, "lgst_reduction", "max");
  if (reduction == "max") {
    c.fit.reduction.kind = MapReduction::Kind::kMax;
  } else if (reduction == "top_k_mean") {
    c.fit.reduction.kind = MapReduction::Kind::kTopKMean;
  } else {
    fail(ErrorCode::kConfig, "fit.lgst_reduction must be 'max' or 'top_k_mean'");
  }
  c.fit.reduction.top_fraction = get_or<double>(fit, "top_fraction", c.fit.reduction.top_fraction);
  require_positive(c.fit.reduction.top_fraction > 0 && c.fit.reduction.top_fraction <= 1,
                   "fit.top_fraction must be in (0, 1]");

  c.score_split = get_or<std::string>(section_of(doc, "score"), "split", c.score_split);

  const json bench = section_of(doc, "bench");
  c.bench.runs = get_or<int>(bench, "runs", c.bench.runs);
  c.bench.batch_size = get_or<int>(bench, "batch_size", c.bench.batch_size);
  c.bench.warmup = get_or<int>(bench, "warmup", c.bench.warmup);
  c.bench.jobs = c.jobs;
  require_positive(c.bench.runs >= 1 && c.bench.batch_size >= 1 && c.bench.warmup >= 0,
                   "bench.runs and bench.batch_size must be >= 1");
  return c;
}

PipelineConfig PipelineConfig::parse(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfig, std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(doc);
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  if (!fs::exists(path)) fail(ErrorCode::kConfig, "config file not found: " + path.string());
  return parse(read_text_file(path));
}

Dataset run_synth(const PipelineConfig& cfg, const fs::path& out_dir) {
  return generate_dataset(cfg.spec, cfg.counts, out_dir, cfg.jobs);
}

LabelSummary run_gen_labels(const PipelineConfig& cfg, const fs::path& dataset_dir, const fs::path& out_dir) {
  const TrainSet t = load_train_set(dataset_dir, cfg.jobs);
  const auto refined = refined_training_masks(cfg, t);
  std::vector<std::string> ids;
  for (const auto* e : t.entries) ids.push_back(e->id);

  LabelGenResult gen;
  if (!cfg.external_features.empty()) {
    const ExternalDescriptors ext = load_external_descriptors(cfg.external_features);
    gen = generate_labels(t.images, refined, cfg.labels, builtin_descriptor, &ext, &ids);
  } else {
    gen = generate_labels(t.images, refined, cfg.labels);
  }
  const DatasetSplit split = filter_label_maps(gen.maps, gen.n_cls, cfg.labels.hdbscan);

  LabelSummary summary;
  summary.n_cls = gen.n_cls;
  summary.fallback = split.fallback;
  for (auto i : split.labeled) summary.labeled.push_back(ids[i]);
  for (auto i : split.unlabeled) summary.unlabeled.push_back(ids[i]);

  fs::create_directories(out_dir / "labels");
  parallel_for(ids.size(), cfg.jobs,
               [&](std::size_t i) { write_label_map(gen.maps[i], out_dir / "labels" / (ids[i] + ".pgm")); });
  const json doc{{"n_cls", summary.n_cls},
                 {"mode", cfg.labels.mode == LabelMode::kFineGrained ? "fine" : "coarse"},
                 {"images", ids},
                 {"labeled", summary.labeled},
                 {"unlabeled", summary.unlabeled},
                 {"fallback", summary.fallback}};
  write_text_file(out_dir / "split.json", doc.dump(2) + "\n");
  return summary;
}

void run_export_crops(const PipelineConfig& cfg, const fs::path& dataset_dir, const fs::path& out_dir) {
  const TrainSet t = load_train_set(dataset_dir, cfg.jobs);
  const auto refined = refined_training_masks(cfg, t);
  std::vector<CropRequest> requests;
  for (std::size_t i = 0; i < t.entries.size(); ++i) {
    for (std::size_t m = 0; m < refined[i].size(); ++m) {
      requests.push_back({t.entries[i]->id, m, &t.images[i], &refined[i][m]});
    }
  }
  export_crops(requests, cfg.labels.rotations, out_dir);
}

LabelSummary read_label_summary(const fs::path& labels_dir) {
  const fs::path p = labels_dir / "split.json";
  if (!fs::exists(p)) fail(ErrorCode::kMissingInput, "no split.json in " + labels_dir.string() + "; run gen-labels first");
  LabelSummary s;
  try {
    const json doc = json::parse(read_text_file(p));
    s.n_cls = doc.at("n_cls").get<int>();
    s.labeled = id_list(doc.at("labeled"));
    s.unlabeled = id_list(doc.at("unlabeled"));
    s.fallback = doc.value("fallback", false);
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfig, "bad split.json: " + std::string(e.what()));
  }
  return s;
}

LabelMap Model::segment(const Image& image) const {
  LabelMap map = oracle_segment(image, spec);
  for (auto& p : map.pixels) p = p < class_of_archetype.size() ? class_of_archetype[p] : 0;
  return map;
}

ImageScore Model::score(const LabelMap& map, const LgstInputs* lgst) const {
  ImageScore out;
  for (std::size_t i = 0; i < patch_sizes.size(); ++i) {
    out.raw[hist_stream(patch_sizes[i])] = banks[i].score(patch_histogram(map, patch_sizes[i], n_cls));
  }
  if (lgst != nullptr && has_lgst()) out.raw["lgst"] = map_to_score(lgst_maps(*lgst).combined, reduction);
  for (const auto& [name, v] : out.raw) out.normalized[name] = profile.normalize(name, v);
  out.fused = profile.fuse(out.raw);
  return out;
}

LocalizationResult Model::localize(const LabelMap& map, const LgstInputs* lgst) const {
  if (train_maps.empty()) fail(ErrorCode::kNoTrainingMaps, "model has no training maps");
  std::vector<HistogramVector> means;
  for (const auto& b : banks) means.push_back(b.mean_vector());
  LocalizationResult r;
  r.patch_hist_map = histogram_anomaly_map(map, means, patch_sizes, n_cls, train_maps);
  double sigma_ph = 0;
  for (int s : patch_sizes) sigma_ph += profile.streams.at(hist_stream(s)).stddev;
  sigma_ph /= static_cast<double>(patch_sizes.size());
  double sigma_lgst = 1.0;
  if (lgst != nullptr && has_lgst()) {
    r.lgst_map = resize_bilinear(lgst_maps(*lgst).combined, map.width, map.height);
    sigma_lgst = profile.streams.at("lgst").stddev;
  } else {
    r.lgst_map = AnomalyMap(map.width, map.height);
  }
  r.merged = merge_maps(r.patch_hist_map, r.lgst_map, sigma_ph, sigma_lgst);
  return r;
}

void Model::save(const fs::path& dir) const {
  fs::create_directories(dir / "train_maps");
  json banks_doc = json::array();
  for (std::size_t i = 0; i < banks.size(); ++i) {
    const std::string file = "bank_" + std::to_string(patch_sizes[i]) + ".bin";
    write_file_bytes(dir / file, banks[i].serialize());
    banks_doc.push_back({{"patch_size", patch_sizes[i]}, {"file", file}});
  }
  json maps_doc = json::array();
  for (std::size_t i = 0; i < train_maps.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "map_%04zu.pgm", i);
    write_label_map(train_maps[i], dir / "train_maps" / name);
    maps_doc.push_back(std::string("train_maps/") + name);
  }
  write_text_file(dir / "calibration.json", profile.to_json() + "\n");
  const json doc{{"version", kVersion},
                 {"n_cls", n_cls},
                 {"patch_sizes", patch_sizes},
                 {"banks", banks_doc},
                 {"class_of_archetype", class_of_archetype},
                 {"lgst_reduction",
                  {{"kind", reduction.kind == MapReduction::Kind::kMax ? "max" : "top_k_mean"},
                   {"top_fraction", reduction.top_fraction}}},
                 {"spec", spec.to_json()},
                 {"train_maps", maps_doc},
                 {"calibration", "calibration.json"},
                 {"config", config}};
  // model.json goes last so a directory with a readable model.json is complete
  write_text_file(dir / "model.json", doc.dump(2) + "\n");
}

Model Model::load(const fs::path& dir) {
  const fs::path p = dir / "model.json";
  if (!fs::exists(p)) fail(ErrorCode::kMissingInput, "no model.json in " + dir.string());
  Model m;
  try {
    const json doc = json::parse(read_text_file(p));
    const int version = doc.at("version").get<int>();
    if (version != kVersion) fail(ErrorCode::kUnsupportedFormat, "model version " + std::to_string(version));
    m.n_cls = doc.at("n_cls").get<int>();
    m.patch_sizes = doc.at("patch_sizes").get<std::vector<int>>();
    for (const auto& b : doc.at("banks")) m.banks.push_back(HistogramBank::deserialize(read_file_bytes(dir / b.at("file").get<std::string>())));
    if (m.banks.size() != m.patch_sizes.size()) fail(ErrorCode::kConfig, "model: one bank per patch size required");
    m.class_of_archetype = doc.at("class_of_archetype").get<std::vector<std::uint16_t>>();
    const json& red = doc.at("lgst_reduction");
    m.reduction.kind = red.at("kind").get<std::string>() == "max" ? MapReduction::Kind::kMax : MapReduction::Kind::kTopKMean;
    m.reduction.top_fraction = red.at("top_fraction").get<double>();
    m.spec = SceneSpec::from_json(doc.at("spec"));
    for (const auto& f : doc.at("train_maps")) m.train_maps.push_back(read_label_map(dir / f.get<std::string>()));
    m.profile = CalibrationProfile::from_json(read_text_file(dir / doc.at("calibration").get<std::string>()));
    m.config = doc.value("config", json::object());
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfig, "bad model.json: " + std::string(e.what()));
  }
  return m;
}

FitSummary run_fit(const PipelineConfig& cfg, const fs::path& dataset_dir, const fs::path& labels_dir,
                   const fs::path& model_dir) {
  const LabelSummary labels = read_label_summary(labels_dir);
  const Dataset ds = Dataset::load(dataset_dir);
  std::map<std::string, const DatasetEntry*> by_id;
  for (const auto& e : ds.entries) by_id[e.id] = &e;

  const std::size_t n = labels.labeled.size();
  std::vector<Image> images(n);
  std::vector<LabelMap> oracle(n), pseudo(n);
  parallel_for(n, cfg.jobs, [&](std::size_t i) {
    auto it = by_id.find(labels.labeled[i]);
    if (it == by_id.end()) fail(ErrorCode::kMissingInput, "labeled image " + labels.labeled[i] + " not in dataset");
    images[i] = read_image(ds.path(it->second->image));
    oracle[i] = oracle_segment(images[i], ds.spec);
    pseudo[i] = read_label_map(labels_dir / "labels" / (labels.labeled[i] + ".pgm"));
  });

  Model model;
  model.n_cls = labels.n_cls;
  model.spec = ds.spec;
  model.patch_sizes = cfg.fit.patch_sizes;
  model.reduction = cfg.fit.reduction;
  model.config = cfg.snapshot;

  // each oracle class maps to the pseudo class it overlaps most on the training set
  const std::size_t n_arch = ds.spec.archetypes.size();
  std::vector<std::vector<std::size_t>> overlap(n_arch + 1, std::vector<std::size_t>(labels.n_cls + 1, 0));
  for (std::size_t i = 0; i < n; ++i) {
    if (oracle[i].pixels.size() != pseudo[i].pixels.size()) fail(ErrorCode::kDimMismatch, "label map size differs from image");
    for (std::size_t p = 0; p < oracle[i].pixels.size(); ++p) {
      const auto k = std::min<std::size_t>(pseudo[i].pixels[p], static_cast<std::size_t>(labels.n_cls));
      ++overlap[oracle[i].pixels[p]][k];
    }
  }
  model.class_of_archetype.assign(n_arch + 1, 0);
  for (std::size_t a = 1; a <= n_arch; ++a) {
    std::size_t best = 0;
    for (int k = 1; k <= labels.n_cls; ++k) {
      if (overlap[a][static_cast<std::size_t>(k)] > best) {
        best = overlap[a][static_cast<std::size_t>(k)];
        model.class_of_archetype[a] = static_cast<std::uint16_t>(k);
      }
    }
  }

  std::vector<LabelMap> maps(n);
  for (std::size_t i = 0; i < n; ++i) {
    maps[i] = oracle[i];
    for (auto& p : maps[i].pixels) p = model.class_of_archetype[p];
  }

  const auto order = shuffled(n, cfg.seed);
  const auto n_val = static_cast<std::size_t>(std::lround(cfg.fit.validation_fraction * static_cast<double>(n)));
  std::vector<std::size_t> fit_idx(order.begin() + static_cast<std::ptrdiff_t>(std::min(n_val, n)), order.end());
  std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::min(n_val, n)));
  std::sort(fit_idx.begin(), fit_idx.end());
  std::sort(val_idx.begin(), val_idx.end());

  std::map<std::string, std::vector<double>> validation;
  for (int s : model.patch_sizes) {
    std::vector<HistogramVector> samples;
    for (auto i : fit_idx) samples.push_back(patch_histogram(maps[i], s, model.n_cls));
    model.banks.push_back(HistogramBank::fit(samples, cfg.fit.policy, s, model.n_cls));
    auto& scores = validation[Model::hist_stream(s)];
    for (auto i : val_idx) scores.push_back(model.banks.back().score(patch_histogram(maps[i], s, model.n_cls)));
  }

  if (auto tm = ds.tensor_manifest()) {
    const LgstManifest manifest = LgstManifest::load(*tm);
    bool complete = true;
    for (auto i : val_idx) complete = complete && manifest.contains(labels.labeled[i]);
    if (complete) {
      auto& scores = validation["lgst"];
      scores.resize(val_idx.size());
      parallel_for(val_idx.size(), cfg.jobs, [&](std::size_t v) {
        scores[v] = map_to_score(lgst_maps(manifest.read(labels.labeled[val_idx[v]])).combined, model.reduction);
      });
    } else {
      std::cerr << "warning: tensor manifest lacks validation images; LGST stream not calibrated\n";
    }
  }
  model.profile = calibrate(validation);
  for (auto i : fit_idx) model.train_maps.push_back(maps[i]);
  model.save(model_dir);

  FitSummary summary;
  summary.fit_images = fit_idx.size();
  summary.validation_images = val_idx.size();
  for (const auto& [name, _] : model.profile.streams) summary.streams.push_back(name);
  return summary;
}

json score_record(const ScoredImage& s) {
  json j{{"id", s.id}, {"scores", s.score.raw}, {"normalized", s.score.normalized}, {"fused", s.score.fused}};
  if (!s.kind.empty()) j["kind"] = s.kind;
  return j;
}

std::vector<ScoredImage> run_score(const Model& model, const ScoreInputs& inputs, int jobs) {
  const ResolvedInputs r = resolve_inputs(model, inputs);
  std::vector<ScoredImage> out(r.items.size());
  parallel_for(r.items.size(), jobs, [&](std::size_t i) {
    const auto& item = r.items[i];
    std::optional<LgstInputs> lgst;
    if (r.tensors) lgst = r.tensors->read(item.id);
    out[i] = {item.id, item.kind, model.score(map_for(model, item), lgst ? &*lgst : nullptr)};
  });
  return out;
}

LocalizationResult run_localize(const Model& model, const ScoreInputs& inputs, const fs::path& out_dir) {
  const ResolvedInputs r = resolve_inputs(model, inputs);
  if (r.items.size() != 1) fail(ErrorCode::kInvalidArgument, "localize takes exactly one image");
  const auto& item = r.items.front();
  std::optional<LgstInputs> lgst;
  if (r.tensors) lgst = r.tensors->read(item.id);
  LocalizationResult res = model.localize(map_for(model, item), lgst ? &*lgst : nullptr);
  fs::create_directories(out_dir);
  write_anomaly_map(res.patch_hist_map, out_dir / "patch_hist.pgm", out_dir / "patch_hist.json");
  write_anomaly_map(res.lgst_map, out_dir / "lgst.pgm", out_dir / "lgst.json");
  write_anomaly_map(res.merged, out_dir / "merged.pgm", out_dir / "merged.json");
  return res;
}

BenchReport run_bench(const Model& model, const ScoreInputs& inputs, const BenchConfig& cfg) {
  const ResolvedInputs r = resolve_inputs(model, inputs);
  // inputs are decoded up front so the timed region covers segmentation and scoring only
  std::vector<Image> images(r.items.size());
  std::vector<std::optional<LabelMap>> given(r.items.size());
  std::vector<std::optional<LgstInputs>> tensors(r.items.size());
  for (std::size_t i = 0; i < r.items.size(); ++i) {
    if (!r.items[i].label_map.empty()) {
      given[i] = read_label_map(r.items[i].label_map);
    } else {
      images[i] = read_image(r.items[i].image);
    }
    if (r.tensors) tensors[i] = r.tensors->read(r.items[i].id);
  }
  return bench(
      [&](std::size_t i) {
        const LabelMap map = given[i] ? *given[i] : model.segment(images[i]);
        volatile double fused = model.score(map, tensors[i] ? &*tensors[i] : nullptr).fused;
        (void)fused;
      },
      r.items.size(), cfg);
}

}  // namespace csad
