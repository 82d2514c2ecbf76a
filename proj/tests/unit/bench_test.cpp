#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "csad/bench.hpp"
#include "error_helpers.hpp"

namespace csad {
namespace {

using testing_support::code_of;

TEST(Bench, ThroughputFormula) {
  EXPECT_DOUBLE_EQ(throughput(8, 500, 2.0), 2000.0);
  EXPECT_DOUBLE_EQ(throughput(1, 1, 0.5), 2.0);
}

TEST(Bench, DefaultsAndWorkCounts) {
  const BenchConfig def;
  EXPECT_EQ(def.runs, 500);
  EXPECT_EQ(def.batch_size, 8);

  std::atomic<int> calls{0};
  BenchConfig cfg;
  cfg.runs = 3;
  cfg.batch_size = 4;
  cfg.warmup = 2;
  cfg.jobs = 2;
  const auto r = bench([&](std::size_t) { ++calls; }, 5, cfg);
  EXPECT_EQ(calls.load(), 2 + 3 + 3 * 4);
  EXPECT_EQ(r.runs, 3);
  EXPECT_EQ(r.batch_size, 4);
  EXPECT_DOUBLE_EQ(r.throughput_fps, throughput(4, 3, r.total_time_s));
}

TEST(Bench, SingleRunMeasuresWork) {
  BenchConfig cfg;
  cfg.runs = 1;
  cfg.batch_size = 1;
  cfg.warmup = 0;
  const auto r = bench([](std::size_t) { std::this_thread::sleep_for(std::chrono::milliseconds(20)); }, 1, cfg);
  EXPECT_GE(r.latency_ms, 19.0);
  EXPECT_GE(r.total_time_s, 0.019);
  EXPECT_GT(r.throughput_fps, 0.0);
}

TEST(Bench, ReportJsonRoundTripAndErrors) {
  BenchConfig cfg;
  cfg.runs = 2;
  cfg.warmup = 0;
  const auto r = bench([](std::size_t) {}, 1, cfg);
  const auto back = BenchReport::from_json(r.to_json());
  EXPECT_EQ(back.runs, 2);
  EXPECT_EQ(back.batch_size, 8);
  EXPECT_EQ(back.throughput_fps, r.throughput_fps);

  EXPECT_EQ(code_of([] { bench([](std::size_t) {}, 0); }), ErrorCode::kEmptyInput);
  cfg.runs = 0;
  EXPECT_EQ(code_of([&] { bench([](std::size_t) {}, 1, cfg); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { BenchReport::from_json(nlohmann::json::array()); }), ErrorCode::kConfig);
}

}  // namespace
}  // namespace csad
