#include "spatial_smooth/error.hpp"

namespace spatial_smooth {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidMatrix: return "InvalidMatrix";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::InvalidDissimilarity: return "InvalidDissimilarity";
    case ErrorCode::RegionTooSmall: return "RegionTooSmall";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::AdjacencyError: return "AdjacencyError";
    case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::DegenerateAxis: return "DegenerateAxis";
    case ErrorCode::TooManyKnots: return "TooManyKnots";
    case ErrorCode::DuplicateKnots: return "DuplicateKnots";
    case ErrorCode::DegenerateKnots: return "DegenerateKnots";
    case ErrorCode::PenaltyNotPSD: return "PenaltyNotPSD";
    case ErrorCode::DimensionError: return "DimensionError";
    case ErrorCode::ZeroDistance: return "ZeroDistance";
    case ErrorCode::DegenerateFlows: return "DegenerateFlows";
    case ErrorCode::RankDeficientEmbedding: return "RankDeficientEmbedding";
    case ErrorCode::InvalidMixing: return "InvalidMixing";
    case ErrorCode::FieldOverflow: return "FieldOverflow";
    case ErrorCode::IncompatibleSpec: return "IncompatibleSpec";
    case ErrorCode::InitializationError: return "InitializationError";
    case ErrorCode::NumericalError: return "NumericalError";
    case ErrorCode::WrongFamily: return "WrongFamily";
    case ErrorCode::UndefinedAUROC: return "UndefinedAUROC";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace spatial_smooth
