#pragma once

#include "daef/activation.hpp"
#include "daef/linalg.hpp"
#include "daef/random.hpp"
#include "daef/rolann.hpp"
#include "daef/scaler.hpp"
#include "daef/threshold.hpp"
#include "daef/types.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace daef {

/// Network shape and hyperparameters. layer_sizes = [m0, m1, ..., mL] where
/// m1 is the latent width produced by the SVD encoder and mL == m0.
struct Architecture {
  std::vector<Eigen::Index> layer_sizes;
  Activation hidden_activation{ActivationKind::Sigmoid};
  double lambda_hidden = 0.5;
  double lambda_last = 0.5;
  double clamp_eps = kDefaultClampEps;
  std::uint64_t init_seed = 0;

  /// Throws InvalidArchitecture naming the violated rule.
  void validate() const;

  Eigen::Index input_dim() const { return layer_sizes.front(); }
  Eigen::Index latent_dim() const { return layer_sizes.at(1); }
  /// Number of decoder layers, hidden ones plus the linear output layer.
  std::size_t decoder_depth() const { return layer_sizes.size() - 2; }

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// A decoder layer computes act(weights^T h + bias). `knowledge` keeps one
/// ROLANN partial per neuron of the problem that produced the weights.
struct DecoderLayer {
  Matrix weights;
  Vector bias;
  LayerPartials knowledge;
};

struct DaefModel {
  Architecture arch;
  Matrix encoder_weights;   // m0 x m1, orthonormal columns, no bias
  SvdThin encoder_knowledge;  // untruncated merged SVD of the training data
  std::vector<DecoderLayer> decoder;  // hidden layers, then the linear output layer
  std::optional<FittedThreshold> threshold;
  /// Standardisation fitted on the raw training features. The model's own
  /// functions never apply it; raw-data entry points do.
  std::optional<StandardScaler> input_scaler;

  Eigen::Index input_dim() const { return arch.input_dim(); }
};

/// Fixed first half of the auxiliary autoencoder used to train one hidden
/// decoder layer.
struct AuxiliaryInit {
  Matrix weights;  // m_l x m_next, Xavier-Glorot uniform
  Vector bias;     // m_next, standard normal
};

/// Draws W (row-major) then b from the stream.
AuxiliaryInit init_auxiliary(SeedStream& stream, Eigen::Index m_l, Eigen::Index m_next);

struct DecoderLayerResult {
  Matrix weights;  // m_l x m_next
  Vector bias;     // m_next
  std::vector<Matrix> h_next;  // one block per input block
  LayerPartials partials;
  AuxiliaryInit aux;
  LayerFit aux_fit;  // second half of the auxiliary network (m_next -> m_l)
};

/// Trains one hidden decoder layer through an auxiliary autoencoder whose
/// input and target are h_prev. The layer bias is the auxiliary hidden bias.
DecoderLayerResult train_decoder_layer(std::span<const Matrix> h_prev_blocks, Eigen::Index m_next, double lambda,
                                       Activation act, SeedStream& stream, std::size_t workers,
                                       double clamp_eps = kDefaultClampEps);

DecoderLayerResult train_decoder_layer(const Matrix& h_prev, Eigen::Index m_next, double lambda, Activation act,
                                       SeedStream& stream, std::size_t workers,
                                       double clamp_eps = kDefaultClampEps);

/// Trains on `x` (m0 x n) split into `partitions` contiguous column blocks.
/// Throws InvalidArchitecture, InsufficientSamples, TooManyPartitions and
/// numeric errors tagged with the layer.
DaefModel train(const Matrix& x, const Architecture& arch, std::size_t partitions = 1, std::size_t workers = 1);

/// Same as train() with the blocks supplied by the caller.
DaefModel train_blocks(std::span<const Matrix> blocks, const Architecture& arch, std::size_t workers = 1);

/// Reconstruction of x, same shape. Throws ShapeMismatch.
Matrix predict(const DaefModel& model, const Matrix& x);

/// Latent representation, m1 x n. Throws ShapeMismatch.
Matrix encode(const DaefModel& model, const Matrix& x);

/// act(w^T h + b 1^T)
Matrix layer_forward(const Matrix& weights, const Vector& bias, const Matrix& h, Activation act);

/// Recomputes every weight from the stored knowledge only, keeping hidden
/// biases (they come from the shared seed, not from data).
DaefModel resolve_from_knowledge(const DaefModel& model, std::size_t workers = 1);

/// Splits columns into `parts` contiguous blocks whose sizes differ by at most one.
std::vector<Matrix> contiguous_blocks(const Matrix& x, std::size_t parts);

}  // namespace daef
