#pragma once

#include "daef/activation.hpp"
#include "daef/types.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace daef {

inline constexpr double kDefaultClampEps = 1e-3;

/// Per-sample quantities for one output neuron: the inverse-activated
/// targets, the activation slope at those points, and the inputs with a
/// constant-1 bias row appended.
struct RolannWorkset {
  Vector d_bar;
  Vector f_prime;
  Matrix inputs_aug;
};

/// Sufficient statistics of one output neuron. Two partials built from
/// disjoint sample sets merge into the partial of their union; the size of
/// a partial never depends on how many samples it absorbed.
struct RolannPartial {
  Vector m;   // X F^2 d_bar, length m_in + 1
  Matrix u;   // (m_in + 1) x r, orthonormal columns
  Vector s;   // length r, descending
  std::uint64_t count = 0;

  Eigen::Index dim() const { return m.size(); }

  /// Neutral element for merge_partials.
  static RolannPartial zero(Eigen::Index dim);
};

/// Throws NonFiniteInput, ShapeMismatch, DomainError.
RolannWorkset make_workset(const Eigen::Ref<const Matrix>& inputs, const Eigen::Ref<const Vector>& desired,
                           Activation act, double clamp_eps = kDefaultClampEps);

RolannPartial compute_partial(const RolannWorkset& ws);

/// Throws ShapeMismatch.
RolannPartial merge_partials(const RolannPartial& a, const RolannPartial& b);

/// One concatenate-then-SVD over all parts; equivalent to folding
/// merge_partials but with a single decomposition. Throws EmptyInput,
/// ShapeMismatch.
RolannPartial merge_all(std::span<const RolannPartial> parts);

/// w = U diag(1 / (s^2 + lambda)) U^T m. The last entry is the bias.
/// Throws SingularSystem when lambda == 0 and some s <= 1e-10, DomainError
/// when lambda < 0.
Vector solve_weights(const RolannPartial& p, double lambda);

/// Weights of a whole layer: column j holds the input weights of output
/// neuron j, so the layer output is act(weights^T x + bias).
struct LayerFit {
  Matrix weights;  // m_in x m_out
  Vector bias;     // m_out
};

using LayerPartials = std::vector<RolannPartial>;

/// One partial per target row (output neuron).
LayerPartials compute_layer_partials(const Eigen::Ref<const Matrix>& inputs, const Eigen::Ref<const Matrix>& targets,
                                     Activation act, double clamp_eps, std::size_t workers);

/// Merges per-neuron partials coming from several sample blocks.
LayerPartials merge_layer_partials(std::span<const LayerPartials> blocks);

LayerFit solve_layer(std::span<const RolannPartial> partials, double lambda, std::size_t workers);

struct LayerFitResult {
  LayerFit fit;
  LayerPartials partials;
};

/// Independent regularised solve for every output neuron. The result is
/// identical for every worker count.
LayerFitResult fit_layer(const Eigen::Ref<const Matrix>& inputs, const Eigen::Ref<const Matrix>& targets,
                         Activation act, double lambda, std::size_t workers,
                         double clamp_eps = kDefaultClampEps);

}  // namespace daef
