#include "csad/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace csad {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kOk: return "Ok";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kTooManyClasses: return "TooManyClasses";
    case ErrorCode::kEmptyMask: return "EmptyMask";
    case ErrorCode::kEmptySet: return "EmptySet";
    case ErrorCode::kClassAbsent: return "ClassAbsent";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kTooFewPoints: return "TooFewPoints";
    case ErrorCode::kAllNoise: return "AllNoise";
    case ErrorCode::kNoSurvivingClusters: return "NoSurvivingClusters";
    case ErrorCode::kNoComponent: return "NoComponent";
    case ErrorCode::kNoValidPlacement: return "NoValidPlacement";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kTooFewScores: return "TooFewScores";
    case ErrorCode::kUnknownStream: return "UnknownStream";
    case ErrorCode::kNoTrainingMaps: return "NoTrainingMaps";
    case ErrorCode::kSpecInfeasible: return "SpecInfeasible";
    case ErrorCode::kConfig: return "Config";
    case ErrorCode::kMissingInput: return "MissingInput";
    case ErrorCode::kFeatureDimMismatch: return "FeatureDimMismatch";
    case ErrorCode::kInternal: return "Internal";
  }
  return "Unknown";
}

std::uint16_t LabelMap::max_class() const {
  return pixels.empty() ? 0 : *std::max_element(pixels.begin(), pixels.end());
}

std::size_t BinaryMask::area() const {
  return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; }));
}

double AnomalyMap::sum() const { return std::accumulate(values.begin(), values.end(), 0.0); }

double AnomalyMap::max() const {
  return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

AnomalyMap resize_bilinear(const AnomalyMap& m, int width, int height) {
  if (m.width <= 0 || m.height <= 0 || width <= 0 || height <= 0) {
    fail(ErrorCode::kInvalidArgument, "resize_bilinear: empty map");
  }
  AnomalyMap out(width, height);
  const double sx = static_cast<double>(m.width) / width;
  const double sy = static_cast<double>(m.height) / height;
  for (int y = 0; y < height; ++y) {
    double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(m.height - 1));
    int y0 = static_cast<int>(std::floor(fy));
    int y1 = std::min(y0 + 1, m.height - 1);
    double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(m.width - 1));
      int x0 = static_cast<int>(std::floor(fx));
      int x1 = std::min(x0 + 1, m.width - 1);
      double wx = fx - x0;
      double top = m.at(x0, y0) * (1 - wx) + m.at(x1, y0) * wx;
      double bot = m.at(x0, y1) * (1 - wx) + m.at(x1, y1) * wx;
      out.at(x, y) = top * (1 - wy) + bot * wy;
    }
  }
  return out;
}

}  // namespace csad
