#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spatial_smooth {

enum class ErrorCode {
  InvalidMatrix,
  NotPSD,
  NotPositiveDefinite,
  InvalidDissimilarity,
  RegionTooSmall,
  DuplicateId,
  AdjacencyError,
  DisconnectedGraph,
  DegenerateAxis,
  TooManyKnots,
  DuplicateKnots,
  DegenerateKnots,
  PenaltyNotPSD,
  DimensionError,
  ZeroDistance,
  DegenerateFlows,
  RankDeficientEmbedding,
  InvalidMixing,
  FieldOverflow,
  IncompatibleSpec,
  InitializationError,
  NumericalError,
  WrongFamily,
  UndefinedAUROC,
  TooShort,
  InvalidArgument,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so that
/// callers (CLI, bindings, tests) can branch on the kind without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace spatial_smooth
