#include "daef/activation.hpp"

#include "daef/error.hpp"

#include <algorithm>
#include <cmath>

namespace daef {

double Activation::value(double z) const {
  switch (kind_) {
    case ActivationKind::Sigmoid:
      // Split on sign so exp never overflows.
      if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
      {
        const double e = std::exp(z);
        return e / (1.0 + e);
      }
    case ActivationKind::Tanh:
      return std::tanh(z);
    case ActivationKind::Linear:
      return z;
  }
  return z;
}

double Activation::derivative(double z) const {
  switch (kind_) {
    case ActivationKind::Sigmoid: {
      const double f = value(z);
      return f * (1.0 - f);
    }
    case ActivationKind::Tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case ActivationKind::Linear:
      return 1.0;
  }
  return 1.0;
}

double Activation::inverse(double y) const {
  switch (kind_) {
    case ActivationKind::Sigmoid:
      if (!(y > 0.0 && y < 1.0)) {
        throw Error(ErrorCode::DomainError, "logit undefined at " + std::to_string(y));
      }
      return std::log(y / (1.0 - y));
    case ActivationKind::Tanh:
      if (!(y > -1.0 && y < 1.0)) {
        throw Error(ErrorCode::DomainError, "atanh undefined at " + std::to_string(y));
      }
      return std::atanh(y);
    case ActivationKind::Linear:
      return y;
  }
  return y;
}

double Activation::clamp(double y, double eps) const {
  switch (kind_) {
    case ActivationKind::Sigmoid:
      return std::clamp(y, eps, 1.0 - eps);
    case ActivationKind::Tanh:
      return std::clamp(y, -1.0 + eps, 1.0 - eps);
    case ActivationKind::Linear:
      return y;
  }
  return y;
}

Matrix Activation::apply(const Eigen::Ref<const Matrix>& z) const {
  Matrix out = z;
  apply_inplace(out);
  return out;
}

void Activation::apply_inplace(Matrix& z) const {
  if (kind_ == ActivationKind::Linear) return;
  z = z.unaryExpr([this](double v) { return value(v); });
}

std::string_view Activation::name() const noexcept {
  switch (kind_) {
    case ActivationKind::Sigmoid: return "sigmoid";
    case ActivationKind::Tanh: return "tanh";
    case ActivationKind::Linear: return "linear";
  }
  return "sigmoid";
}

std::optional<Activation> Activation::parse(std::string_view name) {
  if (name == "sigmoid" || name == "logistic") return Activation(ActivationKind::Sigmoid);
  if (name == "tanh") return Activation(ActivationKind::Tanh);
  if (name == "linear") return Activation(ActivationKind::Linear);
  return std::nullopt;
}

}  // namespace daef
