#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace daef {

enum class ErrorCode {
  NonFiniteInput,
  RankOutOfRange,
  ShapeMismatch,
  EmptyInput,
  DomainError,
  SingularSystem,
  InsufficientSamples,
  InvalidArchitecture,
  VersionMismatch,
  SchemaError,
  CorruptPayload,
  UnknownSession,
  PayloadTooLarge,
  NodeTimeout,
  SessionAborted,
  ArchitectureMismatch,
  SeedMismatch,
  TooFewSamples,
  LengthMismatch,
  NoPositives,
  InsufficientAnomalies,
  ParseError,
  MissingLabelColumn,
  NonNumericFeature,
  TooManyPartitions,
  IoError,
  ConfigError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Library-wide exception. The code is stable and is what callers branch on;
/// the message carries context such as layer index or CSV row/column.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace daef
