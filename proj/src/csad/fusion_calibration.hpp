#pragma once

#include <map>
#include <string>
#include <vector>

namespace csad {

inline constexpr double kTrimLow = 0.20;
inline constexpr double kTrimHigh = 0.80;
inline constexpr double kSigmaFloor = 1e-12;
inline constexpr std::size_t kMinCalibrationScores = 5;

struct TrimmedStats {
  double mean = 0.0;
  double stddev = 0.0;  // population std of the kept slice, floored
  double low = kTrimLow;
  double high = kTrimHigh;
};

// Sorts ascending and keeps indices floor(low*n) <= i < ceil(high*n).
TrimmedStats trimmed_stats(std::vector<double> scores, double low = kTrimLow, double high = kTrimHigh);

class CalibrationProfile {
 public:
  std::map<std::string, TrimmedStats> streams;

  // S_hat = (S - mu) / sigma
  double normalize(const std::string& stream, double raw) const;
  // Sum of normalized scores over the given streams.
  double fuse(const std::map<std::string, double>& raw) const;

  std::string to_json() const;
  static CalibrationProfile from_json(const std::string& text);
};

CalibrationProfile calibrate(const std::map<std::string, std::vector<double>>& validation_scores,
                             double low = kTrimLow, double high = kTrimHigh);

inline double fuse(const CalibrationProfile& profile, const std::map<std::string, double>& raw) {
  return profile.fuse(raw);
}

}  // namespace csad
