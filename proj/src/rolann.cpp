#include "daef/rolann.hpp"

#include "daef/error.hpp"
#include "daef/linalg.hpp"
#include "daef/parallel.hpp"

#include <string>

namespace daef {

namespace {

Error tag_neuron(const Error& e, std::size_t neuron) {
  return Error(e.code(), "output neuron " + std::to_string(neuron) + ": " + e.detail());
}

template <typename Fn>
void for_each_neuron(std::size_t count, std::size_t workers, Fn&& fn) {
  parallel_for(count, workers, [&](std::size_t j) {
    try {
      fn(j);
    } catch (const Error& e) {
      throw tag_neuron(e, j);
    }
  });
}

}  // namespace

RolannPartial RolannPartial::zero(Eigen::Index dim) {
  RolannPartial p;
  p.m = Vector::Zero(dim);
  p.u = Matrix::Identity(dim, dim);
  p.s = Vector::Zero(dim);
  p.count = 0;
  return p;
}

RolannWorkset make_workset(const Eigen::Ref<const Matrix>& inputs, const Eigen::Ref<const Vector>& desired,
                           Activation act, double clamp_eps) {
  if (inputs.cols() != desired.size()) {
    throw Error(ErrorCode::ShapeMismatch, std::to_string(inputs.cols()) + " samples but " +
                                              std::to_string(desired.size()) + " targets");
  }
  if (!(clamp_eps > 0.0 && clamp_eps <= 0.1)) {
    throw Error(ErrorCode::DomainError, "clamp_eps must lie in (0, 0.1]");
  }
  require_finite(inputs, "layer inputs");
  require_finite(desired, "layer targets");

  const Eigen::Index n = inputs.cols();
  RolannWorkset ws;
  ws.inputs_aug.resize(inputs.rows() + 1, n);
  ws.inputs_aug.topRows(inputs.rows()) = inputs;
  ws.inputs_aug.bottomRows(1).setOnes();

  ws.d_bar.resize(n);
  ws.f_prime.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = act.inverse(act.clamp(desired(i), clamp_eps));
    ws.d_bar(i) = z;
    ws.f_prime(i) = act.derivative(z);
  }
  return ws;
}

RolannPartial compute_partial(const RolannWorkset& ws) {
  RolannPartial p;
  const Matrix xf = ws.inputs_aug * ws.f_prime.asDiagonal();
  SvdThin svd = svd_thin(xf);
  p.u = std::move(svd.u);
  p.s = std::move(svd.s);
  p.m = ws.inputs_aug * ws.f_prime.cwiseProduct(ws.f_prime).cwiseProduct(ws.d_bar);
  p.count = static_cast<std::uint64_t>(ws.inputs_aug.cols());
  return p;
}

RolannPartial merge_all(std::span<const RolannPartial> parts) {
  if (parts.empty()) {
    throw Error(ErrorCode::EmptyInput, "no partials to merge");
  }
  const Eigen::Index dim = parts.front().dim();
  std::vector<Matrix> products;
  products.reserve(parts.size());
  RolannPartial out;
  out.m = Vector::Zero(dim);
  for (const auto& part : parts) {
    if (part.dim() != dim || part.u.rows() != dim) {
      throw Error(ErrorCode::ShapeMismatch, "partial of dimension " + std::to_string(part.dim()) +
                                                " merged with dimension " + std::to_string(dim));
    }
    products.push_back(part.u * part.s.asDiagonal());
    out.m += part.m;
    out.count += part.count;
  }
  SvdThin merged = merge_products(products);
  out.u = std::move(merged.u);
  out.s = std::move(merged.s);
  return out;
}

RolannPartial merge_partials(const RolannPartial& a, const RolannPartial& b) {
  const RolannPartial pair[] = {a, b};
  return merge_all(pair);
}

Vector solve_weights(const RolannPartial& p, double lambda) {
  if (!(lambda >= 0.0)) {
    throw Error(ErrorCode::DomainError, "lambda must be non-negative");
  }
  if (lambda == 0.0) {
    for (Eigen::Index i = 0; i < p.s.size(); ++i) {
      if (p.s(i) <= 1e-10) {
        throw Error(ErrorCode::SingularSystem,
                    "singular value " + std::to_string(i) + " is numerically zero and lambda = 0");
      }
    }
  }
  const Vector scale = (p.s.array().square() + lambda).inverse().matrix();
  return p.u * (scale.asDiagonal() * (p.u.transpose() * p.m));
}

LayerPartials compute_layer_partials(const Eigen::Ref<const Matrix>& inputs, const Eigen::Ref<const Matrix>& targets,
                                     Activation act, double clamp_eps, std::size_t workers) {
  if (inputs.cols() != targets.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "inputs have " + std::to_string(inputs.cols()) + " samples, targets " +
                                              std::to_string(targets.cols()));
  }
  const auto outputs = static_cast<std::size_t>(targets.rows());
  LayerPartials partials(outputs);
  for_each_neuron(outputs, workers, [&](std::size_t j) {
    const Vector desired = targets.row(static_cast<Eigen::Index>(j)).transpose();
    partials[j] = compute_partial(make_workset(inputs, desired, act, clamp_eps));
  });
  return partials;
}

LayerPartials merge_layer_partials(std::span<const LayerPartials> blocks) {
  if (blocks.empty()) {
    throw Error(ErrorCode::EmptyInput, "no partial blocks to merge");
  }
  const std::size_t outputs = blocks.front().size();
  LayerPartials merged(outputs);
  std::vector<RolannPartial> column;
  column.reserve(blocks.size());
  for (std::size_t j = 0; j < outputs; ++j) {
    column.clear();
    for (const auto& block : blocks) {
      if (block.size() != outputs) {
        throw Error(ErrorCode::ShapeMismatch, "blocks disagree on the number of output neurons");
      }
      column.push_back(block[j]);
    }
    if (column.size() == 1) {
      merged[j] = column.front();
    } else {
      try {
        merged[j] = merge_all(column);
      } catch (const Error& e) {
        throw tag_neuron(e, j);
      }
    }
  }
  return merged;
}

LayerFit solve_layer(std::span<const RolannPartial> partials, double lambda, std::size_t workers) {
  if (partials.empty()) {
    throw Error(ErrorCode::EmptyInput, "layer without output neurons");
  }
  const Eigen::Index dim = partials.front().dim();
  const auto outputs = static_cast<Eigen::Index>(partials.size());
  LayerFit fit{Matrix(dim - 1, outputs), Vector(outputs)};
  for_each_neuron(partials.size(), workers, [&](std::size_t j) {
    if (partials[j].dim() != dim) {
      throw Error(ErrorCode::ShapeMismatch, "partials disagree on input dimension");
    }
    const Vector w = solve_weights(partials[j], lambda);
    const auto col = static_cast<Eigen::Index>(j);
    fit.weights.col(col) = w.head(dim - 1);
    fit.bias(col) = w(dim - 1);
  });
  return fit;
}

LayerFitResult fit_layer(const Eigen::Ref<const Matrix>& inputs, const Eigen::Ref<const Matrix>& targets,
                         Activation act, double lambda, std::size_t workers, double clamp_eps) {
  if (workers < 1) workers = 1;
  LayerFitResult out;
  out.partials = compute_layer_partials(inputs, targets, act, clamp_eps, workers);
  out.fit = solve_layer(out.partials, lambda, workers);
  return out;
}

}  // namespace daef
