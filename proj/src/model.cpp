#include "daef/model.hpp"

#include "daef/error.hpp"

#include <cmath>
#include <string>

namespace daef {

namespace {

constexpr Activation kLinear{ActivationKind::Linear};

Error tag_layer(const Error& e, std::size_t layer) {
  return Error(e.code(), "layer " + std::to_string(layer) + ": " + e.detail());
}

template <typename Fn>
auto at_layer(std::size_t layer, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw tag_layer(e, layer);
  }
}

void require_rows(const Matrix& x, Eigen::Index rows) {
  if (x.rows() != rows) {
    throw Error(ErrorCode::ShapeMismatch,
                "input has " + std::to_string(x.rows()) + " rows, model expects " + std::to_string(rows));
  }
}

}  // namespace

void Architecture::validate() const {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::InvalidArchitecture, why); };
  if (layer_sizes.size() < 3) fail("need at least an encoder and one decoder layer (3 sizes)");
  for (auto m : layer_sizes) {
    if (m < 1) fail("every layer needs at least one neuron");
  }
  if (layer_sizes.front() != layer_sizes.back()) {
    fail("last layer size " + std::to_string(layer_sizes.back()) + " must equal input size " +
         std::to_string(layer_sizes.front()));
  }
  if (layer_sizes[1] > layer_sizes[0]) fail("latent size must not exceed the input size");
  if (!(lambda_hidden > 0.0) || !(lambda_last > 0.0)) fail("regularisation must be positive");
  if (!(clamp_eps > 0.0 && clamp_eps <= 0.1)) fail("clamp_eps must lie in (0, 0.1]");
}

AuxiliaryInit init_auxiliary(SeedStream& stream, Eigen::Index m_l, Eigen::Index m_next) {
  AuxiliaryInit aux{Matrix(m_l, m_next), Vector(m_next)};
  const double limit = std::sqrt(6.0 / static_cast<double>(m_l + m_next));
  for (Eigen::Index i = 0; i < m_l; ++i) {
    for (Eigen::Index j = 0; j < m_next; ++j) aux.weights(i, j) = stream.uniform(-limit, limit);
  }
  for (Eigen::Index j = 0; j < m_next; ++j) aux.bias(j) = stream.normal();
  return aux;
}

Matrix layer_forward(const Matrix& weights, const Vector& bias, const Matrix& h, Activation act) {
  Matrix z = weights.transpose() * h;
  z.colwise() += bias;
  act.apply_inplace(z);
  return z;
}

DecoderLayerResult train_decoder_layer(std::span<const Matrix> h_prev_blocks, Eigen::Index m_next, double lambda,
                                       Activation act, SeedStream& stream, std::size_t workers,
                                       double clamp_eps) {
  if (h_prev_blocks.empty()) {
    throw Error(ErrorCode::EmptyInput, "no input blocks");
  }
  const Eigen::Index m_l = h_prev_blocks.front().rows();
  DecoderLayerResult out;
  out.aux = init_auxiliary(stream, m_l, m_next);

  std::vector<LayerPartials> block_partials;
  block_partials.reserve(h_prev_blocks.size());
  for (const auto& h : h_prev_blocks) {
    require_rows(h, m_l);
    if (h.cols() == 0) continue;
    const Matrix h_c1 = layer_forward(out.aux.weights, out.aux.bias, h, act);
    block_partials.push_back(compute_layer_partials(h_c1, h, act, clamp_eps, workers));
  }
  if (block_partials.empty()) throw Error(ErrorCode::EmptyInput, "all input blocks are empty");
  out.partials = merge_layer_partials(block_partials);
  out.aux_fit = solve_layer(out.partials, lambda, workers);

  out.weights = out.aux_fit.weights.transpose();
  out.bias = out.aux.bias;
  out.h_next.reserve(h_prev_blocks.size());
  for (const auto& h : h_prev_blocks) out.h_next.push_back(layer_forward(out.weights, out.bias, h, act));
  return out;
}

DecoderLayerResult train_decoder_layer(const Matrix& h_prev, Eigen::Index m_next, double lambda, Activation act,
                                       SeedStream& stream, std::size_t workers, double clamp_eps) {
  return train_decoder_layer(std::span<const Matrix>(&h_prev, 1), m_next, lambda, act, stream, workers,
                             clamp_eps);
}

std::vector<Matrix> contiguous_blocks(const Matrix& x, std::size_t parts) {
  const auto n = static_cast<std::size_t>(x.cols());
  if (parts < 1 || parts > n) {
    throw Error(ErrorCode::TooManyPartitions,
                std::to_string(parts) + " partitions for " + std::to_string(n) + " samples");
  }
  std::vector<Matrix> blocks;
  blocks.reserve(parts);
  const std::size_t base = n / parts;
  const std::size_t extra = n % parts;
  Eigen::Index at = 0;
  for (std::size_t p = 0; p < parts; ++p) {
    const auto width = static_cast<Eigen::Index>(base + (p < extra ? 1 : 0));
    blocks.push_back(x.middleCols(at, width));
    at += width;
  }
  return blocks;
}

DaefModel train(const Matrix& x, const Architecture& arch, std::size_t partitions, std::size_t workers) {
  arch.validate();
  require_rows(x, arch.input_dim());
  if (x.cols() < arch.latent_dim()) {
    throw Error(ErrorCode::InsufficientSamples, std::to_string(x.cols()) + " samples for a latent width of " +
                                                    std::to_string(arch.latent_dim()));
  }
  const auto blocks = contiguous_blocks(x, partitions);
  return train_blocks(blocks, arch, workers);
}

DaefModel train_blocks(std::span<const Matrix> blocks, const Architecture& arch, std::size_t workers) {
  arch.validate();
  if (blocks.empty()) throw Error(ErrorCode::EmptyInput, "no training blocks");
  Eigen::Index total = 0;
  for (const auto& b : blocks) {
    require_rows(b, arch.input_dim());
    require_finite(b, "training data");
    total += b.cols();
  }
  if (total < arch.latent_dim()) {
    throw Error(ErrorCode::InsufficientSamples,
                std::to_string(total) + " samples for a latent width of " + std::to_string(arch.latent_dim()));
  }
  if (workers < 1) workers = 1;

  DaefModel model;
  model.arch = arch;
  const Activation hidden = arch.hidden_activation;

  // Encoder: local SVDs merged, truncated to the latent width.
  std::vector<Matrix> h;
  at_layer(1, [&] {
    std::vector<Matrix> products;
    for (const auto& b : blocks) {
      if (b.cols() > 0) products.push_back(svd_thin(b).scaled_u());
    }
    model.encoder_knowledge = merge_products(products);
    model.encoder_weights = truncate(model.encoder_knowledge, arch.latent_dim()).u;
    for (const auto& b : blocks) h.push_back(hidden.apply(model.encoder_weights.transpose() * b));
    return 0;
  });

  SeedStream stream(arch.init_seed);
  const std::size_t depth = arch.decoder_depth();
  for (std::size_t l = 1; l < depth; ++l) {
    at_layer(l + 1, [&] {
      auto layer = train_decoder_layer(h, arch.layer_sizes[l + 1], arch.lambda_hidden, hidden, stream, workers,
                                       arch.clamp_eps);
      model.decoder.push_back({std::move(layer.weights), std::move(layer.bias), std::move(layer.partials)});
      h = std::move(layer.h_next);
      return 0;
    });
  }

  // Output layer: supervised, linear, targets are the inputs themselves.
  at_layer(depth + 1, [&] {
    std::vector<LayerPartials> block_partials;
    for (std::size_t p = 0; p < blocks.size(); ++p) {
      if (blocks[p].cols() == 0) continue;
      block_partials.push_back(compute_layer_partials(h[p], blocks[p], kLinear, arch.clamp_eps, workers));
    }
    LayerPartials merged = merge_layer_partials(block_partials);
    LayerFit fit = solve_layer(merged, arch.lambda_last, workers);
    model.decoder.push_back({std::move(fit.weights), std::move(fit.bias), std::move(merged)});
    return 0;
  });
  return model;
}

Matrix encode(const DaefModel& model, const Matrix& x) {
  require_rows(x, model.input_dim());
  return model.arch.hidden_activation.apply(model.encoder_weights.transpose() * x);
}

Matrix predict(const DaefModel& model, const Matrix& x) {
  Matrix h = encode(model, x);
  const std::size_t last = model.decoder.size() - 1;
  for (std::size_t l = 0; l < model.decoder.size(); ++l) {
    const auto& layer = model.decoder[l];
    h = layer_forward(layer.weights, layer.bias, h, l == last ? kLinear : model.arch.hidden_activation);
  }
  return h;
}

DaefModel resolve_from_knowledge(const DaefModel& model, std::size_t workers) {
  DaefModel out = model;
  out.encoder_weights = truncate(model.encoder_knowledge, model.arch.latent_dim()).u;
  const std::size_t last = out.decoder.size() - 1;
  for (std::size_t l = 0; l < out.decoder.size(); ++l) {
    auto& layer = out.decoder[l];
    at_layer(l + 2, [&] {
      if (l == last) {
        LayerFit fit = solve_layer(layer.knowledge, model.arch.lambda_last, workers);
        layer.weights = std::move(fit.weights);
        layer.bias = std::move(fit.bias);
      } else {
        layer.weights = solve_layer(layer.knowledge, model.arch.lambda_hidden, workers).weights.transpose();
      }
      return 0;
    });
  }
  return out;
}

}  // namespace daef
