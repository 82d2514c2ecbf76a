#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "csad/csad.h"
#include "temp_dir.hpp"

namespace {

using testing_support::TempDir;

constexpr const char* kSmallConfig = R"({
  "seed": 5,
  "synth": {"n_train": 30, "n_test_normal": 6, "n_test_anomalous": 3},
  "labels": {"rotations": 4}
})";

class ConfigPtr {
 public:
  explicit ConfigPtr(const char* text) { status = csad_config_parse(text, &cfg); }
  ~ConfigPtr() { csad_config_free(cfg); }
  csad_config* cfg = nullptr;
  csad_status status;
};

// One small dataset, label set and model shared by the pipeline tests.
class CapiPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir;
    ConfigPtr c(kSmallConfig);
    ASSERT_EQ(c.status, CSAD_OK);
    ASSERT_EQ(csad_synth(c.cfg, path("data").c_str()), CSAD_OK) << csad_last_error();
    ASSERT_EQ(csad_gen_labels(c.cfg, path("data").c_str(), path("labels").c_str(), &n_cls_), CSAD_OK)
        << csad_last_error();
    ASSERT_EQ(csad_fit(c.cfg, path("data").c_str(), path("labels").c_str(), path("model").c_str()), CSAD_OK)
        << csad_last_error();
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static std::string path(const std::string& rel) { return (dir_->path() / rel).string(); }

  static TempDir* dir_;
  static int n_cls_;
};

TempDir* CapiPipeline::dir_ = nullptr;
int CapiPipeline::n_cls_ = 0;

TEST_F(CapiPipeline, LabelsRecoverArchetypeCount) { EXPECT_EQ(n_cls_, 4); }

TEST_F(CapiPipeline, ModelExposesStreams) {
  csad_model* m = nullptr;
  ASSERT_EQ(csad_model_open(path("model").c_str(), &m), CSAD_OK);
  EXPECT_EQ(csad_model_n_cls(m), 4);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < csad_model_stream_count(m); ++i) names.emplace_back(csad_model_stream_name(m, i));
  EXPECT_EQ(names, (std::vector<std::string>{"hist_128", "hist_256", "lgst"}));
  EXPECT_EQ(csad_model_stream_name(m, 99), nullptr);
  csad_model_close(m);
}

TEST_F(CapiPipeline, ScoreFileAgreesWithBatchScoring) {
  csad_model* m = nullptr;
  ASSERT_EQ(csad_model_open(path("model").c_str(), &m), CSAD_OK);
  csad_inputs in{};
  const std::string data = path("data");
  in.dataset_dir = data.c_str();
  in.split = "test";
  in.use_dataset_tensors = 0;
  std::size_t count = 0;
  ASSERT_EQ(csad_model_score(m, &in, path("scores.jsonl").c_str(), 2, &count), CSAD_OK) << csad_last_error();
  EXPECT_EQ(count, 6u + 4u * 3u);

  std::ifstream lines(path("scores.jsonl"));
  std::string first;
  std::getline(lines, first);
  const auto id_pos = first.find("\"id\":\"") + 6;
  const std::string id = first.substr(id_pos, first.find('"', id_pos) - id_pos);
  const auto fused_pos = first.find("\"fused\":") + 8;
  const double fused_batch = std::stod(first.substr(fused_pos));

  double fused = 0;
  double raw[3];
  const std::string image = path("data/images/" + id + ".ppm");
  ASSERT_EQ(csad_model_score_file(m, image.c_str(), nullptr, nullptr, &fused, raw, 3), CSAD_OK) << csad_last_error();
  EXPECT_NEAR(fused, fused_batch, 1e-9 * std::max(1.0, std::fabs(fused)));
  EXPECT_TRUE(std::isnan(raw[2]));  // no tensors given
  EXPECT_EQ(csad_model_score_file(m, image.c_str(), nullptr, nullptr, &fused, raw, 2), CSAD_INVALID_ARGUMENT);
  csad_model_close(m);
}

TEST_F(CapiPipeline, LocalizeWritesThreeMaps) {
  csad_model* m = nullptr;
  ASSERT_EQ(csad_model_open(path("model").c_str(), &m), CSAD_OK);
  csad_inputs in{};
  const std::string data = path("data");
  in.dataset_dir = data.c_str();
  in.id = "test_extra_component_0000";
  in.use_dataset_tensors = 1;
  ASSERT_EQ(csad_model_localize(m, &in, path("maps").c_str()), CSAD_OK) << csad_last_error();
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(path("maps"))) files += e.is_regular_file();
  EXPECT_GE(files, 3u);

  in.id = nullptr;
  in.split = "test";
  EXPECT_EQ(csad_model_localize(m, &in, path("maps2").c_str()), CSAD_INVALID_ARGUMENT);
  csad_model_close(m);
}

TEST_F(CapiPipeline, BenchFillsReport) {
  csad_model* m = nullptr;
  ASSERT_EQ(csad_model_open(path("model").c_str(), &m), CSAD_OK);
  csad_inputs in{};
  const std::string data = path("data");
  in.dataset_dir = data.c_str();
  in.split = "test";
  csad_bench_report r{};
  ASSERT_EQ(csad_model_bench(m, &in, 3, 2, 1, 1, nullptr, &r), CSAD_OK) << csad_last_error();
  EXPECT_EQ(r.runs, 3);
  EXPECT_EQ(r.batch_size, 2);
  EXPECT_DOUBLE_EQ(r.throughput_fps, 2 * 3 / r.total_time_s);
  csad_model_close(m);
}

TEST(Capi, StatusNamesAndErrors) {
  EXPECT_STREQ(csad_status_name(CSAD_OK), "Ok");
  EXPECT_STREQ(csad_status_name(CSAD_TOO_FEW_SAMPLES), "TooFewSamples");
  EXPECT_STRNE(csad_version(), "");
  csad_config* cfg = nullptr;
  EXPECT_EQ(csad_config_parse("{not json", &cfg), CSAD_CONFIG);
  EXPECT_EQ(cfg, nullptr);
  EXPECT_STRNE(csad_last_error(), "");
  EXPECT_EQ(csad_config_parse(R"({"nonsense": 1})", &cfg), CSAD_CONFIG);
  EXPECT_EQ(csad_config_parse(nullptr, nullptr), CSAD_INVALID_ARGUMENT);
  ASSERT_EQ(csad_config_parse(nullptr, &cfg), CSAD_OK);
  EXPECT_EQ(csad_config_set_jobs(cfg, 0), CSAD_INVALID_ARGUMENT);
  EXPECT_EQ(csad_config_set_seed(cfg, 9), CSAD_OK);
  csad_config_free(cfg);

  csad_model* m = nullptr;
  EXPECT_EQ(csad_model_open("/nonexistent/model", &m), CSAD_MISSING_INPUT);
  EXPECT_EQ(m, nullptr);
  csad_model_close(nullptr);
}

TEST(Capi, GenLabelsOnSingleImageFitIsTooFewSamples) {
  TempDir dir;
  ConfigPtr c(R"({"synth": {"n_train": 1, "n_test_normal": 1, "n_test_anomalous": 0}, "labels": {"rotations": 2}})");
  ASSERT_EQ(c.status, CSAD_OK);
  const auto data = (dir / "d").string(), labels = (dir / "l").string(), model = (dir / "m").string();
  ASSERT_EQ(csad_synth(c.cfg, data.c_str()), CSAD_OK);
  int n_cls = 0;
  ASSERT_EQ(csad_gen_labels(c.cfg, data.c_str(), labels.c_str(), &n_cls), CSAD_OK) << csad_last_error();
  EXPECT_EQ(csad_fit(c.cfg, data.c_str(), labels.c_str(), model.c_str()), CSAD_TOO_FEW_SAMPLES);
}

TEST(Capi, BankMatchesEuclideanForIsotropicSamples) {
  // square lattice corners: sample covariance is diagonal and equal
  const std::vector<double> samples{0, 0, 0, 2, 2, 0, 2, 2};
  csad_bank* bank = nullptr;
  ASSERT_EQ(csad_bank_fit(samples.data(), 4, 2, 0.0, &bank), CSAD_OK);
  double s = 0;
  const double h[2] = {1 + 4.0 / std::sqrt(3.0) * 0.6, 1 + 4.0 / std::sqrt(3.0) * 0.8};
  ASSERT_EQ(csad_bank_score(bank, h, 2, &s), CSAD_OK);
  // covariance is (4/3) I, so the score is |h - mu| / sqrt(4/3) = 2
  EXPECT_NEAR(s, 2.0, 1e-6);
  EXPECT_EQ(csad_bank_score(bank, h, 3, &s), CSAD_DIM_MISMATCH);
  csad_bank_free(bank);
  EXPECT_EQ(csad_bank_fit(samples.data(), 1, 2, 1e-3, &bank), CSAD_TOO_FEW_SAMPLES);
}

TEST(Capi, ClassHistogramAndAuroc) {
  const std::uint8_t px[6] = {0, 1, 1, 2, 0, 1};
  double out[2];
  ASSERT_EQ(csad_class_histogram(px, 3, 2, 2, out), CSAD_OK);
  EXPECT_DOUBLE_EQ(out[0], 0.5);
  EXPECT_DOUBLE_EQ(out[1], 1.0 / 6);
  EXPECT_EQ(csad_class_histogram(px, 3, 2, 1, out), CSAD_INVALID_ARGUMENT);

  const double a[3] = {0, 1, 2}, b[2] = {1, 5};
  double auc = 0;
  ASSERT_EQ(csad_auroc(a, 3, b, 2, &auc), CSAD_OK);
  EXPECT_DOUBLE_EQ(auc, 4.5 / 6);
  EXPECT_EQ(csad_auroc(a, 0, b, 2, &auc), CSAD_EMPTY_INPUT);
}

}  // namespace
