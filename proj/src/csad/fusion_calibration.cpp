#include "csad/fusion_calibration.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "csad/error.hpp"

namespace csad {

using json = nlohmann::json;

TrimmedStats trimmed_stats(std::vector<double> scores, double low, double high) {
  if (scores.size() < kMinCalibrationScores) {
    fail(ErrorCode::kTooFewScores, "trimmed stats need at least 5 scores, got " + std::to_string(scores.size()));
  }
  if (!(low >= 0.0 && low < high && high <= 1.0)) fail(ErrorCode::kInvalidArgument, "bad trim range");
  for (double s : scores) {
    if (!std::isfinite(s)) fail(ErrorCode::kNonFinite, "non-finite score");
  }
  std::sort(scores.begin(), scores.end());
  const double n = static_cast<double>(scores.size());
  // tolerance keeps e.g. 0.7*10 from rounding up to 8 kept entries
  auto begin = static_cast<std::size_t>(std::floor(low * n + 1e-9));
  auto end = static_cast<std::size_t>(std::ceil(high * n - 1e-9));
  end = std::min(end, scores.size());
  if (begin >= end) begin = end - 1;

  TrimmedStats st;
  st.low = low;
  st.high = high;
  const double kept = static_cast<double>(end - begin);
  double sum = 0;
  for (std::size_t i = begin; i < end; ++i) sum += scores[i];
  st.mean = sum / kept;
  double var = 0;
  for (std::size_t i = begin; i < end; ++i) var += (scores[i] - st.mean) * (scores[i] - st.mean);
  st.stddev = std::max(std::sqrt(var / kept), kSigmaFloor);
  return st;
}

CalibrationProfile calibrate(const std::map<std::string, std::vector<double>>& validation_scores, double low,
                             double high) {
  if (validation_scores.empty()) fail(ErrorCode::kTooFewScores, "no score streams to calibrate");
  CalibrationProfile p;
  for (const auto& [name, scores] : validation_scores) p.streams[name] = trimmed_stats(scores, low, high);
  return p;
}

double CalibrationProfile::normalize(const std::string& stream, double raw) const {
  auto it = streams.find(stream);
  if (it == streams.end()) fail(ErrorCode::kUnknownStream, "unknown score stream '" + stream + "'");
  return (raw - it->second.mean) / it->second.stddev;
}

double CalibrationProfile::fuse(const std::map<std::string, double>& raw) const {
  double total = 0;
  for (const auto& [name, value] : raw) total += normalize(name, value);
  return total;
}

std::string CalibrationProfile::to_json() const {
  json doc = json::object();
  for (const auto& [name, st] : streams) {
    doc[name] = {{"mu", st.mean}, {"sigma", st.stddev}, {"low", st.low}, {"high", st.high}};
  }
  return doc.dump(2);
}

CalibrationProfile CalibrationProfile::from_json(const std::string& text) {
  CalibrationProfile p;
  try {
    const auto doc = json::parse(text);
    for (const auto& [name, v] : doc.items()) {
      TrimmedStats st;
      st.mean = v.at("mu").get<double>();
      st.stddev = v.at("sigma").get<double>();
      st.low = v.value("low", kTrimLow);
      st.high = v.value("high", kTrimHigh);
      if (!(st.stddev > 0)) fail(ErrorCode::kConfig, "calibration sigma must be positive for " + name);
      p.streams[name] = st;
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfig, std::string("bad calibration profile: ") + e.what());
  }
  return p;
}

}  // namespace csad
