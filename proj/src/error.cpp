#include "daef/error.hpp"
#include "daef/types.hpp"

#include <string>

namespace daef {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::RankOutOfRange: return "RankOutOfRange";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::InvalidArchitecture: return "InvalidArchitecture";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::CorruptPayload: return "CorruptPayload";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::PayloadTooLarge: return "PayloadTooLarge";
    case ErrorCode::NodeTimeout: return "NodeTimeout";
    case ErrorCode::SessionAborted: return "SessionAborted";
    case ErrorCode::ArchitectureMismatch: return "ArchitectureMismatch";
    case ErrorCode::SeedMismatch: return "SeedMismatch";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NoPositives: return "NoPositives";
    case ErrorCode::InsufficientAnomalies: return "InsufficientAnomalies";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingLabelColumn: return "MissingLabelColumn";
    case ErrorCode::NonNumericFeature: return "NonNumericFeature";
    case ErrorCode::TooManyPartitions: return "TooManyPartitions";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

void require_finite(const Eigen::Ref<const Matrix>& m, std::string_view what) {
  if (!m.allFinite()) {
    throw Error(ErrorCode::NonFiniteInput, std::string(what) + " contains NaN or Inf");
  }
}

}  // namespace daef
