#include "salgrain/mimic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <utility>

#include "salgrain/checkpoint.hpp"
#include "salgrain/conv.hpp"
#include "salgrain/error.hpp"
#include "salgrain/optimizer.hpp"

namespace salgrain {

namespace {

constexpr std::size_t kStride = 2;

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

ConvLayer glorot_layer(std::size_t dim0, std::size_t dim1, std::size_t bias_size, std::mt19937_64& rng) {
  ConvLayer layer{Tensor({dim0, dim1, conv::kKernel, conv::kKernel}), Tensor({bias_size})};
  const double limit = std::sqrt(6.0 / static_cast<double>((dim0 + dim1) * conv::kKernel * conv::kKernel));
  for (auto& v : layer.weight.values()) {
    v = static_cast<double>(static_cast<float>((2.0 * uniform01(rng) - 1.0) * limit));
  }
  return layer;
}

void relu_inplace(Tensor& t) {
  for (auto& v : t.values()) v = v > 0.0 ? v : 0.0;
}

void relu_mask(const Tensor& out, Tensor& grad) {
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!(out[i] > 0.0)) grad[i] = 0.0;
  }
}

void check_image(const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 1) {
    throw Error(ErrorCode::DimensionMismatch, "mimic expects a [1,H,W] image, got " + shape_string(image.shape()));
  }
}

void check_target(const Tensor& image, const UnitMap& target) {
  if (target.width() != image.dim(2) || target.height() != image.dim(1)) {
    throw Error(ErrorCode::DimensionMismatch, "saliency target does not match image size");
  }
}

}  // namespace

MimicAutoencoder make_mimic_autoencoder(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  MimicAutoencoder m;
  m.enc1 = glorot_layer(8, 1, 8, rng);
  m.enc2 = glorot_layer(16, 8, 16, rng);
  m.dec1 = glorot_layer(16, 8, 8, rng);
  m.dec2 = glorot_layer(8, 1, 1, rng);
  return m;
}

MimicAutoencoder zeros_like(const MimicAutoencoder& model) {
  auto zero = [](const ConvLayer& l) { return ConvLayer{Tensor(l.weight.shape()), Tensor(l.bias.shape())}; };
  return {zero(model.enc1), zero(model.enc2), zero(model.dec1), zero(model.dec2)};
}

std::vector<Tensor*> parameters(MimicAutoencoder& m) {
  return {&m.enc1.weight, &m.enc1.bias, &m.enc2.weight, &m.enc2.bias,
          &m.dec1.weight, &m.dec1.bias, &m.dec2.weight, &m.dec2.bias};
}

std::vector<const Tensor*> parameters(const MimicAutoencoder& m) {
  return {&m.enc1.weight, &m.enc1.bias, &m.enc2.weight, &m.enc2.bias,
          &m.dec1.weight, &m.dec1.bias, &m.dec2.weight, &m.dec2.bias};
}

MimicForward forward(const MimicAutoencoder& model, const Tensor& image) {
  check_image(image);
  MimicForward f;
  f.input = image;
  f.h1 = conv::forward(image, model.enc1.weight, model.enc1.bias, kStride);
  relu_inplace(f.h1);
  f.h2 = conv::forward(f.h1, model.enc2.weight, model.enc2.bias, kStride);
  relu_inplace(f.h2);
  f.h3 = conv::transposed_forward(f.h2, model.dec1.weight, model.dec1.bias, kStride, f.h1.dim(1), f.h1.dim(2));
  relu_inplace(f.h3);
  f.output = conv::transposed_forward(f.h3, model.dec2.weight, model.dec2.bias, kStride, image.dim(1), image.dim(2));
  for (auto& v : f.output.values()) v = 1.0 / (1.0 + std::exp(-v));
  return f;
}

double mimic_loss(const Tensor& output, const UnitMap& target) {
  if (output.size() != target.size()) throw Error(ErrorCode::DimensionMismatch, "mimic output/target size mismatch");
  auto t = target.values();
  double sum = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double d = output[i] - t[i];
    sum += d * d;
  }
  return sum / static_cast<double>(t.size());
}

double accumulate_mimic_gradients(const MimicAutoencoder& model, const Tensor& image, const UnitMap& target,
                                  MimicGradients& grads) {
  check_target(image, target);
  const MimicForward f = forward(model, image);
  const double loss = mimic_loss(f.output, target);

  auto t = target.values();
  const double scale = 2.0 / static_cast<double>(t.size());
  Tensor d_logit(f.output.shape());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double y = f.output[i];
    d_logit[i] = scale * (y - t[i]) * y * (1.0 - y);
  }

  Tensor d_h3;
  conv::transposed_backward(f.h3, model.dec2.weight, d_logit, kStride, &d_h3, grads.dec2.weight, grads.dec2.bias);
  relu_mask(f.h3, d_h3);
  Tensor d_h2;
  conv::transposed_backward(f.h2, model.dec1.weight, d_h3, kStride, &d_h2, grads.dec1.weight, grads.dec1.bias);
  relu_mask(f.h2, d_h2);
  Tensor d_h1;
  conv::backward(f.h1, model.enc2.weight, d_h2, kStride, &d_h1, grads.enc2.weight, grads.enc2.bias);
  relu_mask(f.h1, d_h1);
  conv::backward(f.input, model.enc1.weight, d_h1, kStride, nullptr, grads.enc1.weight, grads.enc1.bias);
  return loss;
}

double mean_mimic_loss(const MimicAutoencoder& model, std::span<const MimicPair> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyDataset, "no mimic pairs");
  double total = 0.0;
  for (const auto& pair : pairs) total += mimic_loss(forward(model, pair.image).output, to_unit(pair.foi));
  return total / static_cast<double>(pairs.size());
}

MimicTrainResult train_mimic(std::span<const MimicPair> pairs, const MimicTrainConfig& config) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyDataset, "mimic training needs at least one pair");
  if (config.epochs == 0 || config.batch_size == 0) {
    throw Error(ErrorCode::ConfigInvalid, "mimic epochs and batch size must be >= 1");
  }
  const auto& shape = pairs.front().image.shape();
  std::vector<UnitMap> targets;
  targets.reserve(pairs.size());
  for (const auto& pair : pairs) {
    check_image(pair.image);
    if (pair.image.shape() != shape) throw Error(ErrorCode::DimensionMismatch, "mimic images differ in size");
    check_target(pair.image, to_unit(pair.foi));
    targets.push_back(to_unit(pair.foi));
  }

  MimicTrainResult result;
  result.model = make_mimic_autoencoder(config.seed);
  result.initial_mse = mean_mimic_loss(result.model, pairs);

  Optimizer adam(OptimizerKind::Adam, config.learning_rate);
  std::mt19937_64 rng(config.seed ^ 0x6d696d6963ULL);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto params = parameters(result.model);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      MimicGradients grads = zeros_like(result.model);
      for (std::size_t i = start; i < end; ++i) {
        const double loss = accumulate_mimic_gradients(result.model, pairs[order[i]].image, targets[order[i]], grads);
        if (!std::isfinite(loss)) throw Error(ErrorCode::NumericFailure, "non-finite mimic loss");
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (Tensor* g : parameters(grads)) {
        for (auto& v : g->values()) v *= inv;
      }
      adam.step(params, parameters(std::as_const(grads)));
    }
  }
  result.final_mse = mean_mimic_loss(result.model, pairs);
  return result;
}

SaliencyMap generate_saliency(const MimicAutoencoder& model, const Tensor& image) {
  check_image(image);
  const MimicForward f = forward(model, image);
  std::vector<double> values(f.output.values().begin(), f.output.values().end());
  return to_saliency(UnitMap(image.dim(2), image.dim(1), std::move(values)));
}

void save_mimic(const std::filesystem::path& path, const MimicAutoencoder& model) {
  const auto params = parameters(model);
  save_checkpoint(path, ModelKind::MimicAutoencoder, params);
}

MimicAutoencoder load_mimic(const std::filesystem::path& path) {
  Checkpoint ck = load_checkpoint(path);
  if (ck.kind != ModelKind::MimicAutoencoder || ck.tensors.size() != 8) {
    throw Error(ErrorCode::MalformedHeader, "checkpoint is not a mimic autoencoder");
  }
  MimicAutoencoder reference = make_mimic_autoencoder(0);
  auto dst = parameters(reference);
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (ck.tensors[i].shape() != dst[i]->shape()) {
      throw Error(ErrorCode::MalformedHeader, "mimic checkpoint tensor has unexpected shape");
    }
    *dst[i] = std::move(ck.tensors[i]);
  }
  return reference;
}

}  // namespace salgrain
