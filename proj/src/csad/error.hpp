#pragma once

#include <stdexcept>
#include <string>

namespace csad {

// Numeric values mirror csad_status in the C API header.
enum class ErrorCode : int {
  kOk = 0,
  kInvalidArgument = 1,
  kIo = 2,
  kBadMagic = 3,
  kDimMismatch = 4,
  kNonFinite = 5,
  kUnsupportedFormat = 6,
  kTooManyClasses = 7,
  kEmptyMask = 8,
  kEmptySet = 9,
  kClassAbsent = 10,
  kEmptyInput = 11,
  kTooFewPoints = 12,
  kAllNoise = 13,
  kNoSurvivingClusters = 14,
  kNoComponent = 15,
  kNoValidPlacement = 16,
  kTooFewSamples = 17,
  kTooFewScores = 18,
  kUnknownStream = 19,
  kNoTrainingMaps = 20,
  kSpecInfeasible = 21,
  kConfig = 22,
  kMissingInput = 23,
  kFeatureDimMismatch = 24,
  kInternal = 25,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace csad
