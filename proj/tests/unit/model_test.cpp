#include "daef/anomaly.hpp"
#include "daef/error.hpp"
#include "daef/model.hpp"
#include "daef/model_io.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

using namespace daef;

namespace {

Architecture arch_of(std::vector<Eigen::Index> sizes, double lh = 0.5, double ll = 0.5,
                     ActivationKind act = ActivationKind::Sigmoid, std::uint64_t seed = 7) {
  Architecture a;
  a.layer_sizes = std::move(sizes);
  a.lambda_hidden = lh;
  a.lambda_last = ll;
  a.hidden_activation = Activation(act);
  a.init_seed = seed;
  return a;
}

double max_model_delta(const DaefModel& a, const DaefModel& b) {
  double d = test::max_abs_diff(a.encoder_weights, b.encoder_weights);
  REQUIRE(a.decoder.size() == b.decoder.size());
  for (std::size_t l = 0; l < a.decoder.size(); ++l) {
    d = std::max(d, test::max_abs_diff(a.decoder[l].weights, b.decoder[l].weights));
    d = std::max(d, test::max_abs_diff(a.decoder[l].bias, b.decoder[l].bias));
  }
  return d;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::ConfigError;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("architecture validation") {
    CHECK_NOTHROW(arch_of({9, 3, 5, 7, 9}).validate());
    CHECK(code_of([] { arch_of({9, 3, 5, 7, 8}).validate(); }) == ErrorCode::InvalidArchitecture);
    CHECK(code_of([] { arch_of({4, 4}).validate(); }) == ErrorCode::InvalidArchitecture);
    CHECK(code_of([] { arch_of({4, 5, 4}).validate(); }) == ErrorCode::InvalidArchitecture);
    CHECK(code_of([] { arch_of({4, 0, 4}).validate(); }) == ErrorCode::InvalidArchitecture);
    CHECK(code_of([] { arch_of({4, 2, 4}, 0.0).validate(); }) == ErrorCode::InvalidArchitecture);
  }

  TEST_CASE("auxiliary initialisation") {
    SeedStream a(42), b(42);
    const auto x = init_auxiliary(a, 6, 4);
    const auto y = init_auxiliary(b, 6, 4);
    CHECK(x.weights == y.weights);
    CHECK(x.bias == y.bias);
    const double limit = std::sqrt(6.0 / 10.0);
    CHECK(x.weights.cwiseAbs().maxCoeff() <= limit);

    // Many draws: the uniform spread and the standard normal moments.
    SeedStream s(1);
    const auto big = init_auxiliary(s, 200, 200);
    const double big_limit = std::sqrt(6.0 / 400.0);
    CHECK(big.weights.cwiseAbs().maxCoeff() <= big_limit);
    const double var = big.weights.array().square().mean();
    CHECK(var == doctest::Approx(big_limit * big_limit / 3.0).epsilon(0.02));
    CHECK(std::abs(big.bias.mean()) < 0.3);
  }

  TEST_CASE("decoder layer is a pure function of the seed stream") {
    const Matrix h = test::uniform(5, 40, 3, 0.1, 0.9);
    SeedStream a(9), b(9);
    const Activation act(ActivationKind::Sigmoid);
    const auto x = train_decoder_layer(h, 4, 0.1, act, a, 1);
    const auto y = train_decoder_layer(h, 4, 0.1, act, b, 3);
    CHECK(x.weights == y.weights);
    CHECK(x.bias == y.bias);
    CHECK(x.weights.rows() == 5);
    CHECK(x.weights.cols() == 4);
    CHECK(x.bias == x.aux.bias);
  }

  TEST_CASE("auxiliary network reproduces its input when nearly unregularised") {
    const Matrix h = test::gaussian(4, 60, 4);
    SeedStream stream(5);
    const Activation linear(ActivationKind::Linear);
    const auto layer = train_decoder_layer(h, 4, 1e-9, linear, stream, 1);
    const Matrix h_c1 = layer_forward(layer.aux.weights, layer.aux.bias, h, linear);
    const Matrix back = layer_forward(layer.aux_fit.weights, layer.aux_fit.bias, h_c1, linear);
    CHECK((back - h).cwiseAbs().maxCoeff() < 1e-3);
  }

  TEST_CASE("constant input row stays well-posed") {
    Matrix h = test::uniform(4, 30, 6, 0.1, 0.9);
    h.row(2).setConstant(0.5);
    SeedStream stream(1);
    const auto layer = train_decoder_layer(h, 3, 0.2, Activation(ActivationKind::Sigmoid), stream, 1);
    CHECK(layer.weights.allFinite());
    CHECK(layer.bias.allFinite());
  }

  TEST_CASE("Gaussian cloud: far points reconstruct at least ten times worse") {
    std::mt19937_64 gen(8);
    const Matrix cloud = test::gaussian(2, 200, gen());
    const auto model = train(cloud, arch_of({2, 1, 2, 2}, 0.1, 0.1));
    Matrix far(2, 64);
    for (Eigen::Index j = 0; j < far.cols(); ++j) {
      const double angle = 2 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(far.cols());
      far(0, j) = 10 * std::cos(angle);
      far(1, j) = 10 * std::sin(angle);
    }
    const double near_mse = reconstruction_errors(model, cloud).mean();
    const double far_mse = reconstruction_errors(model, far).mean();
    CHECK(far_mse >= 10 * near_mse);
  }

  TEST_CASE("partition count does not change the model") {
    const Matrix x = test::gaussian(8, 120, 10);
    const auto arch = arch_of({8, 3, 5, 8}, 0.3, 0.6);
    const auto one = train(x, arch, 1);
    for (std::size_t p : {2, 4, 7}) {
      CHECK(max_model_delta(train(x, arch, p), one) < 1e-8);
    }
  }

  TEST_CASE("worker count gives bitwise-identical models") {
    const Matrix x = test::gaussian(6, 90, 11);
    const auto arch = arch_of({6, 2, 4, 6}, 0.3, 0.6, ActivationKind::Tanh);
    const auto one = save_model_string(train(x, arch, 2, 1));
    CHECK(save_model_string(train(x, arch, 2, 4)) == one);
    CHECK(save_model_string(train(x, arch, 2, 1)) == one);
  }

  TEST_CASE("shapes, orthonormal encoder and knowledge") {
    const Matrix x = test::gaussian(9, 80, 12);
    const auto arch = arch_of({9, 3, 5, 7, 9}, 0.8, 0.9);
    const auto model = train(x, arch);
    CHECK(model.encoder_weights.rows() == 9);
    CHECK(model.encoder_weights.cols() == 3);
    CHECK((model.encoder_weights.transpose() * model.encoder_weights - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <
          1e-9);
    REQUIRE(model.decoder.size() == 3);
    for (std::size_t l = 0; l < 3; ++l) {
      CHECK(model.decoder[l].weights.rows() == arch.layer_sizes[l + 1]);
      CHECK(model.decoder[l].weights.cols() == arch.layer_sizes[l + 2]);
      CHECK(model.decoder[l].bias.size() == arch.layer_sizes[l + 2]);
    }
    CHECK(predict(model, x).rows() == 9);
    CHECK(predict(model, x).cols() == 80);
    CHECK(encode(model, x).rows() == 3);

    const auto resolved = resolve_from_knowledge(model, 2);
    CHECK(max_model_delta(resolved, model) < 1e-12);
  }

  TEST_CASE("errors") {
    const auto arch = arch_of({4, 3, 4});
    CHECK(code_of([&] { train(test::gaussian(4, 2, 1), arch); }) == ErrorCode::InsufficientSamples);
    CHECK(code_of([&] { train(test::gaussian(5, 20, 1), arch); }) == ErrorCode::ShapeMismatch);
    CHECK(code_of([&] { train(test::gaussian(4, 5, 1), arch, 6); }) == ErrorCode::TooManyPartitions);
    const auto model = train(test::gaussian(4, 20, 1), arch);
    CHECK(code_of([&] { predict(model, Matrix::Zero(3, 2)); }) == ErrorCode::ShapeMismatch);
    Matrix bad = test::gaussian(4, 20, 1);
    bad(0, 0) = NAN;
    CHECK(code_of([&] { train(bad, arch); }) == ErrorCode::NonFiniteInput);
  }

  TEST_CASE("identity network reproduces its input") {
    DaefModel m;
    m.arch = arch_of({3, 3, 3, 3}, 0.5, 0.5, ActivationKind::Linear);
    m.encoder_weights = Matrix::Identity(3, 3);
    m.decoder.push_back({Matrix::Identity(3, 3), Vector::Zero(3), {}});
    m.decoder.push_back({Matrix::Identity(3, 3), Vector::Zero(3), {}});
    const Matrix x = test::gaussian(3, 10, 13);
    CHECK(predict(m, x) == x);
    CHECK(reconstruction_errors(m, x).cwiseAbs().maxCoeff() == 0.0);

    // A selecting encoder passes its rows through the hidden activation.
    m.arch.hidden_activation = Activation(ActivationKind::Sigmoid);
    m.arch.layer_sizes = {3, 2, 3};
    m.encoder_weights = Matrix::Zero(3, 2);
    m.encoder_weights(0, 0) = 1.0;
    m.encoder_weights(2, 1) = 1.0;
    const Matrix latent = encode(m, x);
    CHECK(latent.row(0) == m.arch.hidden_activation.apply(x.row(0)));
    CHECK(latent.row(1) == m.arch.hidden_activation.apply(x.row(2)));
  }

  TEST_CASE("prediction is column-wise") {
    const Matrix x = test::gaussian(6, 30, 14);
    const auto model = train(x, arch_of({6, 3, 6}));
    const Matrix batch = predict(model, x);
    std::vector<Eigen::Index> perm(30);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 gen(2);
    std::shuffle(perm.begin(), perm.end(), gen);
    Matrix shuffled(6, 30);
    for (Eigen::Index j = 0; j < 30; ++j) shuffled.col(j) = x.col(perm[j]);
    const Matrix latent = encode(model, x);
    const Matrix latent_shuffled = encode(model, shuffled);
    for (Eigen::Index j = 0; j < 30; ++j) {
      CHECK(latent_shuffled.col(j) == latent.col(perm[j]));
      CHECK(test::max_abs_diff(predict(model, x.col(j)), batch.col(j)) < 1e-12);
    }
  }

  TEST_CASE("save and load") {
    const Matrix x = test::gaussian(5, 40, 15);
    auto model = train(x, arch_of({5, 2, 4, 5}));
    model.threshold = FittedThreshold{ThresholdSpec::percentile(0.9), 0.123456789012345};
    model.input_scaler = StandardScaler{test::gaussian(5, 1, 1), test::uniform(5, 1, 2, 0.5, 2.0)};
    const std::string text = save_model_string(model);
    const auto back = load_model_string(text);
    CHECK(back.encoder_weights == model.encoder_weights);
    CHECK(back.encoder_knowledge.u == model.encoder_knowledge.u);
    for (std::size_t l = 0; l < model.decoder.size(); ++l) {
      CHECK(back.decoder[l].weights == model.decoder[l].weights);
      CHECK(back.decoder[l].bias == model.decoder[l].bias);
      CHECK(back.decoder[l].knowledge.size() == model.decoder[l].knowledge.size());
    }
    CHECK(back.threshold == model.threshold);
    CHECK(back.input_scaler->stds == model.input_scaler->stds);
    CHECK(back.arch == model.arch);
    CHECK(save_model_string(back) == text);
    CHECK(model_fingerprint(back) == model_fingerprint(model));

    CHECK(code_of([&] { load_model_string(text.substr(0, text.size() / 2)); }) == ErrorCode::CorruptPayload);
    auto doc = Json::parse(text);
    doc["format_version"] = 999;
    CHECK(code_of([&] { load_model_string(doc.dump()); }) == ErrorCode::VersionMismatch);
    doc = Json::parse(text);
    doc.erase("encoder");
    CHECK(code_of([&] { load_model_string(doc.dump()); }) == ErrorCode::SchemaError);
    doc = Json::parse(text);
    doc["decoder"][0]["weights"] = Json::array({Json::array({1.0})});
    CHECK(code_of([&] { load_model_string(doc.dump()); }) == ErrorCode::SchemaError);
  }
}
