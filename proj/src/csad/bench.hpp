#pragma once

#include <cstddef>
#include <functional>

#include <json.hpp>

namespace csad {

struct BenchConfig {
  int runs = 500;
  int batch_size = 8;
  int warmup = 10;
  int jobs = 1;  // threads used within one batch; latency is always measured on one thread
};

struct BenchReport {
  double latency_ms = 0.0;      // mean over runs at batch 1
  double throughput_fps = 0.0;  // batch_size * runs / total_time_s
  int runs = 0;
  int batch_size = 0;
  int warmup = 0;
  double total_time_s = 0.0;  // wall clock of the batched runs

  nlohmann::json to_json() const;
  static BenchReport from_json(const nlohmann::json& j);
};

double throughput(int batch_size, int runs, double total_time_s);

// Processes item i with `work`; items are taken round-robin from [0, n_items).
using BenchWork = std::function<void(std::size_t item)>;

BenchReport bench(const BenchWork& work, std::size_t n_items, const BenchConfig& cfg = {});

}  // namespace csad
