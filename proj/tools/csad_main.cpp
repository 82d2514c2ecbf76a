// csad command-line front end; talks to the library only through csad.h.
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "csad/csad.h"

namespace {

using json = nlohmann::json;

// Exit codes: 0 ok, 1 internal, 2 config or usage, 3 label generation,
// 4 too few samples to fit or calibrate, 5 missing or unreadable inputs.
int exit_code_for(csad_status s) {
  switch (s) {
    case CSAD_OK: return 0;
    case CSAD_CONFIG:
    case CSAD_INVALID_ARGUMENT:
    case CSAD_SPEC_INFEASIBLE: return 2;
    case CSAD_NO_SURVIVING_CLUSTERS:
    case CSAD_TOO_MANY_CLASSES:
    case CSAD_EMPTY_SET:
    case CSAD_FEATURE_DIM_MISMATCH: return 3;
    case CSAD_TOO_FEW_SAMPLES:
    case CSAD_TOO_FEW_SCORES: return 4;
    case CSAD_MISSING_INPUT:
    case CSAD_IO:
    case CSAD_BAD_MAGIC:
    case CSAD_UNSUPPORTED_FORMAT:
    case CSAD_DIM_MISMATCH:
    case CSAD_NON_FINITE:
    case CSAD_NO_TRAINING_MAPS: return 5;
    default: return 1;
  }
}

int report(csad_status s) {
  if (s != CSAD_OK) std::cerr << "error: " << csad_status_name(s) << ": " << csad_last_error() << "\n";
  return exit_code_for(s);
}

struct UsageError {
  std::string message;
};

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "JSON config with per-module sections");
  cmd->add_option("--seed", c.seed, "RNG seed (overrides config)");
  cmd->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
}

json load_config(const Common& c) {
  json doc = json::object();
  if (!c.config_path.empty()) {
    std::ifstream in(c.config_path);
    if (!in) throw UsageError{"cannot open config " + c.config_path};
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      doc = json::parse(ss.str());
    } catch (const json::exception& e) {
      throw UsageError{"config " + c.config_path + " is not valid JSON: " + e.what()};
    }
    if (!doc.is_object()) throw UsageError{"config must be a JSON object"};
  }
  if (c.seed) doc["seed"] = *c.seed;
  if (c.jobs) doc["jobs"] = *c.jobs;
  return doc;
}

int jobs_of(const json& doc) { return doc.value("jobs", 1); }

template <typename T>
T section_value(const json& doc, const char* section, const char* key, T fallback) {
  if (!doc.contains(section) || !doc.at(section).is_object()) return fallback;
  try {
    return doc.at(section).value(key, fallback);
  } catch (const json::exception& e) {
    throw UsageError{std::string(section) + "." + key + ": " + e.what()};
  }
}

class ConfigHandle {
 public:
  explicit ConfigHandle(const json& doc) { status_ = csad_config_parse(doc.dump().c_str(), &cfg_); }
  ~ConfigHandle() { csad_config_free(cfg_); }
  ConfigHandle(const ConfigHandle&) = delete;
  ConfigHandle& operator=(const ConfigHandle&) = delete;
  csad_status status() const { return status_; }
  const csad_config* get() const { return cfg_; }

 private:
  csad_config* cfg_ = nullptr;
  csad_status status_ = CSAD_OK;
};

class ModelHandle {
 public:
  explicit ModelHandle(const std::string& dir) { status_ = csad_model_open(dir.c_str(), &model_); }
  ~ModelHandle() { csad_model_close(model_); }
  ModelHandle(const ModelHandle&) = delete;
  ModelHandle& operator=(const ModelHandle&) = delete;
  csad_status status() const { return status_; }
  const csad_model* get() const { return model_; }

 private:
  csad_model* model_ = nullptr;
  csad_status status_ = CSAD_OK;
};

std::string resolve_model_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("CSAD_MODEL_DIR"); env != nullptr && *env != '\0') return env;
  throw UsageError{"no model directory: pass --model or set CSAD_MODEL_DIR"};
}

// Keeps the C strings behind a csad_inputs alive.
struct InputArgs {
  std::string dataset;
  std::string split;
  std::string id;
  std::vector<std::string> images;
  std::vector<std::string> label_maps;
  std::string tensors;
  bool no_tensors = false;

  std::vector<const char*> image_ptrs;
  std::vector<const char*> label_ptrs;

  void add_to(CLI::App* cmd, bool with_split) {
    cmd->add_option("--dataset", dataset, "dataset directory");
    if (with_split) cmd->add_option("--split", split, "dataset split: train, test or all");
    cmd->add_option("--id", id, "single dataset entry");
    cmd->add_option("--image", images, "image file (PPM)");
    cmd->add_option("--label-map", label_maps, "label map file (PGM)");
    cmd->add_option("--tensors", tensors, "LGST tensor manifest");
    cmd->add_flag("--no-tensors", no_tensors, "ignore the dataset's tensor manifest");
  }

  csad_inputs view() {
    image_ptrs.clear();
    label_ptrs.clear();
    for (const auto& s : images) image_ptrs.push_back(s.c_str());
    for (const auto& s : label_maps) label_ptrs.push_back(s.c_str());
    csad_inputs in{};
    in.dataset_dir = dataset.empty() ? nullptr : dataset.c_str();
    in.split = split.empty() ? nullptr : split.c_str();
    in.id = id.empty() ? nullptr : id.c_str();
    in.images = image_ptrs.data();
    in.n_images = image_ptrs.size();
    in.label_maps = label_ptrs.data();
    in.n_label_maps = label_ptrs.size();
    in.tensor_manifest = tensors.empty() ? nullptr : tensors.c_str();
    in.use_dataset_tensors = no_tensors ? 0 : 1;
    return in;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"csad: component-level logical anomaly detection"};
  app.require_subcommand(1);
  app.set_version_flag("--version", csad_version());

  Common synth_c, labels_c, fit_c, score_c, loc_c, bench_c;

  auto* synth = app.add_subcommand("synth", "generate a synthetic benchmark dataset");
  add_common(synth, synth_c);
  std::string synth_out;
  synth->add_option("--out", synth_out, "output dataset directory")->required();

  auto* gen = app.add_subcommand("gen-labels", "generate semantic pseudo-labels for the training images");
  add_common(gen, labels_c);
  std::string gen_dataset, gen_out, export_dir, gen_mode;
  std::optional<std::size_t> alpha;
  gen->add_option("--dataset", gen_dataset, "dataset directory")->required();
  gen->add_option("--out", gen_out, "output directory (default <dataset>/pseudo)");
  gen->add_option("--alpha", alpha, "minimum cluster size");
  gen->add_option("--mode", gen_mode, "fine or coarse");
  gen->add_option("--export-crops", export_dir, "only export component crops to this directory");

  auto* fit = app.add_subcommand("fit", "fit histogram banks and the calibration profile");
  add_common(fit, fit_c);
  std::string fit_dataset, fit_labels, fit_model, fit_out;
  std::vector<int> patch_sizes;
  fit->add_option("--dataset", fit_dataset, "dataset directory")->required();
  fit->add_option("--labels", fit_labels, "gen-labels output (default <dataset>/pseudo)");
  fit->add_option("--model", fit_model, "model directory to write");
  fit->add_option("--out", fit_out, "alias of --model");
  fit->add_option("--patch-sizes", patch_sizes, "patch sizes in pixels")->check(CLI::PositiveNumber);

  auto* score = app.add_subcommand("score", "score images; one JSON object per line");
  add_common(score, score_c);
  std::string score_model, score_out = "-";
  InputArgs score_in;
  score->add_option("--model", score_model, "model directory (default $CSAD_MODEL_DIR)");
  score->add_option("--out", score_out, "output JSONL file, - for stdout");
  score_in.add_to(score, true);

  auto* loc = app.add_subcommand("localize", "write anomaly maps for one image");
  add_common(loc, loc_c);
  std::string loc_model, loc_out;
  InputArgs loc_in;
  loc->add_option("--model", loc_model, "model directory (default $CSAD_MODEL_DIR)");
  loc->add_option("--out", loc_out, "output directory")->required();
  loc_in.add_to(loc, false);

  auto* bench = app.add_subcommand("bench", "latency and throughput of segmentation plus scoring");
  add_common(bench, bench_c);
  std::string bench_model, bench_out;
  std::optional<int> runs, batch, warmup;
  InputArgs bench_in;
  bench->add_option("--model", bench_model, "model directory (default $CSAD_MODEL_DIR)");
  bench->add_option("--out", bench_out, "report JSON file (default stdout)");
  bench->add_option("--runs", runs, "timed runs")->check(CLI::PositiveNumber);
  bench->add_option("--batch", batch, "batch size for throughput")->check(CLI::PositiveNumber);
  bench->add_option("--warmup", warmup, "untimed warm-up runs")->check(CLI::NonNegativeNumber);
  bench_in.add_to(bench, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*synth) {
      ConfigHandle cfg(load_config(synth_c));
      if (cfg.status() != CSAD_OK) return report(cfg.status());
      const csad_status s = csad_synth(cfg.get(), synth_out.c_str());
      if (s == CSAD_OK) std::cout << "dataset written to " << synth_out << "\n";
      return report(s);
    }

    if (*gen) {
      json doc = load_config(labels_c);
      if (alpha) doc["labels"]["alpha"] = *alpha;
      if (!gen_mode.empty()) doc["labels"]["mode"] = gen_mode;
      ConfigHandle cfg(doc);
      if (cfg.status() != CSAD_OK) return report(cfg.status());
      if (!export_dir.empty()) {
        const csad_status s = csad_export_crops(cfg.get(), gen_dataset.c_str(), export_dir.c_str());
        if (s == CSAD_OK) std::cout << "crops written to " << export_dir << "\n";
        return report(s);
      }
      const std::string out = gen_out.empty() ? gen_dataset + "/pseudo" : gen_out;
      int n_cls = 0;
      const csad_status s = csad_gen_labels(cfg.get(), gen_dataset.c_str(), out.c_str(), &n_cls);
      if (s == CSAD_OK) std::cout << "n_cls " << n_cls << "; labels written to " << out << "\n";
      return report(s);
    }

    if (*fit) {
      json doc = load_config(fit_c);
      if (!patch_sizes.empty()) doc["fit"]["patch_sizes"] = patch_sizes;
      ConfigHandle cfg(doc);
      if (cfg.status() != CSAD_OK) return report(cfg.status());
      const std::string model = resolve_model_dir(!fit_model.empty() ? fit_model : fit_out);
      const std::string labels = fit_labels.empty() ? fit_dataset + "/pseudo" : fit_labels;
      const csad_status s = csad_fit(cfg.get(), fit_dataset.c_str(), labels.c_str(), model.c_str());
      if (s == CSAD_OK) std::cout << "model written to " << model << "\n";
      return report(s);
    }

    if (*score) {
      const json doc = load_config(score_c);
      if (score_in.split.empty()) score_in.split = section_value<std::string>(doc, "score", "split", "test");
      ModelHandle model(resolve_model_dir(score_model));
      if (model.status() != CSAD_OK) return report(model.status());
      const csad_inputs in = score_in.view();
      return report(csad_model_score(model.get(), &in, score_out.c_str(), jobs_of(doc), nullptr));
    }

    if (*loc) {
      load_config(loc_c);
      ModelHandle model(resolve_model_dir(loc_model));
      if (model.status() != CSAD_OK) return report(model.status());
      const csad_inputs in = loc_in.view();
      const csad_status s = csad_model_localize(model.get(), &in, loc_out.c_str());
      if (s == CSAD_OK) std::cout << "maps written to " << loc_out << "\n";
      return report(s);
    }

    if (*bench) {
      const json doc = load_config(bench_c);
      const int r = runs.value_or(section_value<int>(doc, "bench", "runs", 500));
      const int b = batch.value_or(section_value<int>(doc, "bench", "batch_size", 8));
      const int w = warmup.value_or(section_value<int>(doc, "bench", "warmup", 10));
      if (bench_in.split.empty()) bench_in.split = "test";
      ModelHandle model(resolve_model_dir(bench_model));
      if (model.status() != CSAD_OK) return report(model.status());
      const csad_inputs in = bench_in.view();
      csad_bench_report rep{};
      const csad_status s = csad_model_bench(model.get(), &in, r, b, w, jobs_of(doc),
                                             bench_out.empty() ? nullptr : bench_out.c_str(), &rep);
      if (s == CSAD_OK && bench_out.empty()) {
        const json j{{"latency_ms", rep.latency_ms}, {"throughput_fps", rep.throughput_fps},
                     {"runs", rep.runs},             {"batch_size", rep.batch_size},
                     {"warmup", rep.warmup},         {"total_time_s", rep.total_time_s}};
        std::cout << j.dump(2) << "\n";
      }
      return report(s);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.message << "\n";
    return 2;
  }
  return 2;
}
