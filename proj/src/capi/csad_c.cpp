#include "csad/csad.h"

#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <new>
#include <string>

#include "csad/pipeline.hpp"
#include "csad/tensor_io.hpp"

struct csad_config {
  csad::PipelineConfig cfg;
};

struct csad_model {
  csad::Model model;
  std::vector<std::string> streams;
};

struct csad_bank {
  csad::HistogramBank bank;
};

namespace {

thread_local std::string g_last_error;

template <typename Fn>
csad_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return CSAD_OK;
  } catch (const csad::Error& e) {
    g_last_error = e.what();
    return static_cast<csad_status>(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return CSAD_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CSAD_INTERNAL;
  } catch (...) {
    g_last_error = "unknown exception";
    return CSAD_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) csad::fail(csad::ErrorCode::kInvalidArgument, what);
}

csad::ScoreInputs single_input(const char* image_path, const char* label_path, const char* tensor_manifest) {
  require(image_path != nullptr || label_path != nullptr, "an image or a label map path is required");
  csad::ScoreInputs in;
  if (image_path != nullptr) {
    in.images.emplace_back(image_path);
  } else {
    in.label_maps.emplace_back(label_path);
  }
  if (tensor_manifest != nullptr) in.tensor_manifest = tensor_manifest;
  return in;
}

csad::ScoreInputs convert(const csad_inputs* in) {
  require(in != nullptr, "inputs are null");
  csad::ScoreInputs out;
  if (in->dataset_dir != nullptr) out.dataset_dir = in->dataset_dir;
  if (in->split != nullptr) out.split = in->split;
  if (in->id != nullptr) out.id = in->id;
  require(in->n_images == 0 || in->images != nullptr, "images is null");
  require(in->n_label_maps == 0 || in->label_maps != nullptr, "label_maps is null");
  for (size_t i = 0; i < in->n_images; ++i) out.images.emplace_back(in->images[i]);
  for (size_t i = 0; i < in->n_label_maps; ++i) out.label_maps.emplace_back(in->label_maps[i]);
  if (in->tensor_manifest != nullptr) out.tensor_manifest = in->tensor_manifest;
  out.use_dataset_tensors = in->use_dataset_tensors != 0;
  return out;
}

}  // namespace

extern "C" {

const char* csad_version(void) { return "0.1.0"; }

const char* csad_status_name(csad_status status) {
  return csad::error_code_name(static_cast<csad::ErrorCode>(status));
}

const char* csad_last_error(void) { return g_last_error.c_str(); }

csad_status csad_config_parse(const char* json_text, csad_config** out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    *out = nullptr;
    const std::string text = json_text == nullptr || *json_text == '\0' ? "{}" : json_text;
    *out = new csad_config{csad::PipelineConfig::parse(text)};
  });
}

csad_status csad_config_load(const char* path, csad_config** out) {
  return guarded([&] {
    require(out != nullptr && path != nullptr, "null argument");
    *out = nullptr;
    *out = new csad_config{csad::PipelineConfig::load(path)};
  });
}

csad_status csad_config_set_seed(csad_config* config, uint64_t seed) {
  return guarded([&] {
    require(config != nullptr, "config is null");
    auto doc = config->cfg.snapshot;
    doc["seed"] = seed;
    config->cfg = csad::PipelineConfig::from_json(doc);
  });
}

csad_status csad_config_set_jobs(csad_config* config, int jobs) {
  return guarded([&] {
    require(config != nullptr, "config is null");
    require(jobs >= 1, "jobs must be >= 1");
    auto doc = config->cfg.snapshot;
    doc["jobs"] = jobs;
    config->cfg = csad::PipelineConfig::from_json(doc);
  });
}

void csad_config_free(csad_config* config) { delete config; }

csad_status csad_synth(const csad_config* config, const char* out_dir) {
  return guarded([&] {
    require(config != nullptr && out_dir != nullptr, "null argument");
    csad::run_synth(config->cfg, out_dir);
  });
}

csad_status csad_gen_labels(const csad_config* config, const char* dataset_dir, const char* out_dir, int* n_cls_out) {
  return guarded([&] {
    require(config != nullptr && dataset_dir != nullptr && out_dir != nullptr, "null argument");
    const auto summary = csad::run_gen_labels(config->cfg, dataset_dir, out_dir);
    if (n_cls_out != nullptr) *n_cls_out = summary.n_cls;
  });
}

csad_status csad_export_crops(const csad_config* config, const char* dataset_dir, const char* out_dir) {
  return guarded([&] {
    require(config != nullptr && dataset_dir != nullptr && out_dir != nullptr, "null argument");
    csad::run_export_crops(config->cfg, dataset_dir, out_dir);
  });
}

csad_status csad_fit(const csad_config* config, const char* dataset_dir, const char* labels_dir, const char* model_dir) {
  return guarded([&] {
    require(config != nullptr && dataset_dir != nullptr && labels_dir != nullptr && model_dir != nullptr,
            "null argument");
    csad::run_fit(config->cfg, dataset_dir, labels_dir, model_dir);
  });
}

csad_status csad_model_open(const char* model_dir, csad_model** out) {
  return guarded([&] {
    require(out != nullptr && model_dir != nullptr, "null argument");
    *out = nullptr;
    auto* m = new csad_model{csad::Model::load(model_dir), {}};
    for (const auto& [name, _] : m->model.profile.streams) m->streams.push_back(name);
    *out = m;
  });
}

void csad_model_close(csad_model* model) { delete model; }

int csad_model_n_cls(const csad_model* model) { return model == nullptr ? -1 : model->model.n_cls; }

size_t csad_model_stream_count(const csad_model* model) { return model == nullptr ? 0 : model->streams.size(); }

const char* csad_model_stream_name(const csad_model* model, size_t index) {
  if (model == nullptr || index >= model->streams.size()) return nullptr;
  return model->streams[index].c_str();
}

csad_status csad_model_score_file(const csad_model* model, const char* image_path, const char* label_path,
                                  const char* tensor_manifest, double* fused, double* raw, size_t raw_len) {
  return guarded([&] {
    require(model != nullptr, "model is null");
    require(raw == nullptr || raw_len >= model->streams.size(), "raw buffer shorter than the stream count");
    const auto scored = csad::run_score(model->model, single_input(image_path, label_path, tensor_manifest), 1);
    const auto& s = scored.front().score;
    if (fused != nullptr) *fused = s.fused;
    if (raw != nullptr) {
      for (std::size_t i = 0; i < model->streams.size(); ++i) {
        auto it = s.raw.find(model->streams[i]);
        raw[i] = it == s.raw.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
      }
    }
  });
}

csad_status csad_model_score(const csad_model* model, const csad_inputs* inputs, const char* out_jsonl, int jobs,
                             size_t* count_out) {
  return guarded([&] {
    require(model != nullptr && out_jsonl != nullptr, "null argument");
    const auto scored = csad::run_score(model->model, convert(inputs), jobs < 1 ? 1 : jobs);
    std::string text;
    for (const auto& s : scored) text += csad::score_record(s).dump() + "\n";
    if (std::string(out_jsonl) == "-") {
      std::fwrite(text.data(), 1, text.size(), stdout);
      std::fflush(stdout);
    } else {
      csad::write_text_file(out_jsonl, text);
    }
    if (count_out != nullptr) *count_out = scored.size();
  });
}

csad_status csad_model_localize(const csad_model* model, const csad_inputs* inputs, const char* out_dir) {
  return guarded([&] {
    require(model != nullptr && out_dir != nullptr, "null argument");
    csad::run_localize(model->model, convert(inputs), out_dir);
  });
}

csad_status csad_model_bench(const csad_model* model, const csad_inputs* inputs, int runs, int batch_size, int warmup,
                             int jobs, const char* out_json, csad_bench_report* report) {
  return guarded([&] {
    require(model != nullptr, "model is null");
    const csad::BenchConfig cfg{runs, batch_size, warmup, jobs < 1 ? 1 : jobs};
    const auto r = csad::run_bench(model->model, convert(inputs), cfg);
    if (out_json != nullptr) csad::write_text_file(out_json, r.to_json().dump(2) + "\n");
    if (report != nullptr) *report = {r.latency_ms, r.throughput_fps, r.runs, r.batch_size, r.warmup, r.total_time_s};
  });
}

csad_status csad_bank_fit(const double* samples, size_t n, size_t dim, double eps, csad_bank** out) {
  return guarded([&] {
    require(out != nullptr && samples != nullptr && dim > 0, "bad bank arguments");
    *out = nullptr;
    std::vector<csad::HistogramVector> rows(n);
    for (size_t i = 0; i < n; ++i) rows[i].assign(samples + i * dim, samples + (i + 1) * dim);
    csad::RegularizationPolicy policy;
    if (eps >= 0) policy.eps = eps;
    *out = new csad_bank{csad::HistogramBank::fit(rows, policy)};
  });
}

csad_status csad_bank_score(const csad_bank* bank, const double* h, size_t dim, double* score) {
  return guarded([&] {
    require(bank != nullptr && h != nullptr && score != nullptr, "null argument");
    if (dim != bank->bank.dim()) csad::fail(csad::ErrorCode::kDimMismatch, "histogram length differs from bank");
    *score = bank->bank.score(csad::HistogramVector(h, h + dim));
  });
}

void csad_bank_free(csad_bank* bank) { delete bank; }

csad_status csad_class_histogram(const uint8_t* pixels, int width, int height, int n_cls, double* out) {
  return guarded([&] {
    require(pixels != nullptr && out != nullptr && width > 0 && height > 0, "bad label map");
    csad::LabelMap map(width, height);
    std::copy(pixels, pixels + map.pixels.size(), map.pixels.begin());
    const auto h = csad::class_histogram(map, n_cls);
    std::copy(h.begin(), h.end(), out);
  });
}

csad_status csad_auroc(const double* normal, size_t n_normal, const double* anomalous, size_t n_anomalous,
                       double* out) {
  return guarded([&] {
    require(out != nullptr && (normal != nullptr || n_normal == 0) && (anomalous != nullptr || n_anomalous == 0),
            "null argument");
    *out = csad::auroc({normal, normal + n_normal}, {anomalous, anomalous + n_anomalous});
  });
}

}  // extern "C"
