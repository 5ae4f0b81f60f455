#pragma once

#include "daef/types.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace daef {

enum class ActivationKind { Sigmoid, Tanh, Linear };

/// An invertible neural transfer function: value, derivative and inverse.
class Activation {
 public:
  constexpr explicit Activation(ActivationKind kind = ActivationKind::Sigmoid) : kind_(kind) {}

  ActivationKind kind() const noexcept { return kind_; }

  double value(double z) const;
  double derivative(double z) const;
  double inverse(double y) const;

  /// Clamps y into the open range of the function shrunk by eps, e.g.
  /// [eps, 1 - eps] for the logistic sigmoid. Identity for linear.
  double clamp(double y, double eps) const;

  Matrix apply(const Eigen::Ref<const Matrix>& z) const;
  void apply_inplace(Matrix& z) const;

  std::string_view name() const noexcept;
  static std::optional<Activation> parse(std::string_view name);

  friend bool operator==(const Activation&, const Activation&) = default;

 private:
  ActivationKind kind_;
};

}  // namespace daef
