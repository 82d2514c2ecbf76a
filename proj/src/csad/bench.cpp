#include "csad/bench.hpp"

#include <algorithm>
#include <chrono>

#include "csad/error.hpp"
#include "csad/parallel.hpp"

namespace csad {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
  return static_cast<double>(std::max<std::int64_t>(ns, 1)) * 1e-9;
}

}  // namespace

double throughput(int batch_size, int runs, double total_time_s) {
  return static_cast<double>(batch_size) * static_cast<double>(runs) / total_time_s;
}

nlohmann::json BenchReport::to_json() const {
  return {{"latency_ms", latency_ms}, {"throughput_fps", throughput_fps}, {"runs", runs},
          {"batch_size", batch_size}, {"warmup", warmup},                 {"total_time_s", total_time_s}};
}

BenchReport BenchReport::from_json(const nlohmann::json& j) {
  BenchReport r;
  try {
    r.latency_ms = j.at("latency_ms").get<double>();
    r.throughput_fps = j.at("throughput_fps").get<double>();
    r.runs = j.at("runs").get<int>();
    r.batch_size = j.at("batch_size").get<int>();
    r.warmup = j.value("warmup", 0);
    r.total_time_s = j.at("total_time_s").get<double>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfig, std::string("bad bench report: ") + e.what());
  }
  return r;
}

BenchReport bench(const BenchWork& work, std::size_t n_items, const BenchConfig& cfg) {
  if (n_items == 0) fail(ErrorCode::kEmptyInput, "bench: no items");
  if (cfg.runs < 1 || cfg.batch_size < 1 || cfg.warmup < 0) {
    fail(ErrorCode::kInvalidArgument, "bench: runs and batch size must be >= 1, warmup >= 0");
  }
  BenchReport report;
  report.runs = cfg.runs;
  report.batch_size = cfg.batch_size;
  report.warmup = cfg.warmup;

  for (int i = 0; i < cfg.warmup; ++i) work(static_cast<std::size_t>(i) % n_items);

  double latency_total = 0;
  for (int r = 0; r < cfg.runs; ++r) {
    const auto start = Clock::now();
    work(static_cast<std::size_t>(r) % n_items);
    latency_total += seconds_since(start);
  }
  report.latency_ms = 1e3 * latency_total / cfg.runs;

  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  const auto start = Clock::now();
  for (int r = 0; r < cfg.runs; ++r) {
    const std::size_t base = static_cast<std::size_t>(r) * batch;
    parallel_for(batch, cfg.jobs, [&](std::size_t b) { work((base + b) % n_items); });
  }
  report.total_time_s = seconds_since(start);
  report.throughput_fps = throughput(cfg.batch_size, cfg.runs, report.total_time_s);
  return report;
}

}  // namespace csad
