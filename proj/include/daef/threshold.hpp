#pragma once

#include <optional>
#include <string>

namespace daef {

/// Rule that turns training reconstruction errors into a cut-off.
struct ThresholdSpec {
  enum class Kind { UnusualIqr, ExtremeIqr, Percentile, Contamination };

  Kind kind = Kind::ExtremeIqr;
  double param = 0.0;  // q for Percentile, rate for Contamination

  static ThresholdSpec unusual_iqr() { return {Kind::UnusualIqr, 0.0}; }
  static ThresholdSpec extreme_iqr() { return {Kind::ExtremeIqr, 0.0}; }
  static ThresholdSpec percentile(double q) { return {Kind::Percentile, q}; }
  static ThresholdSpec contamination(double rate) { return {Kind::Contamination, rate}; }

  bool has_param() const { return kind == Kind::Percentile || kind == Kind::Contamination; }

  /// Throws ConfigError when a parameter is outside (0, 1).
  void validate() const;

  std::string kind_name() const;
  static std::optional<Kind> parse_kind(const std::string& name);

  friend bool operator==(const ThresholdSpec&, const ThresholdSpec&) = default;
};

struct FittedThreshold {
  ThresholdSpec spec;
  double mu = 0.0;

  friend bool operator==(const FittedThreshold&, const FittedThreshold&) = default;
};

}  // namespace daef
