#include "salgrain/cam_classifier.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "salgrain/conv.hpp"
#include "salgrain/error.hpp"

namespace salgrain {

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Values are kept representable in single precision.
double to_single(double v) { return static_cast<double>(static_cast<float>(v)); }

Tensor glorot(std::vector<std::size_t> shape, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : t.values()) v = to_single((2.0 * uniform01(rng) - 1.0) * limit);
  return t;
}

}  // namespace

CamClassifier make_cam_classifier(const CamArchitecture& arch, std::uint64_t seed) {
  if (arch.channels.empty() || arch.classes == 0 || arch.input_channels == 0) {
    throw Error(ErrorCode::ConfigInvalid, "classifier needs at least one conv layer and one class");
  }
  std::mt19937_64 rng(seed);
  CamClassifier model;
  std::size_t in = arch.input_channels;
  for (std::size_t out : arch.channels) {
    const std::size_t k = conv::kKernel * conv::kKernel;
    model.convs.push_back({glorot({out, in, conv::kKernel, conv::kKernel}, in * k, out * k, rng), Tensor({out})});
    in = out;
  }
  model.head_weight = glorot({arch.classes, in}, in, arch.classes, rng);
  model.head_bias = Tensor({arch.classes});
  return model;
}

CamClassifier zeros_like(const CamClassifier& model) {
  CamClassifier z;
  for (const auto& layer : model.convs) z.convs.push_back({Tensor(layer.weight.shape()), Tensor(layer.bias.shape())});
  z.head_weight = Tensor(model.head_weight.shape());
  z.head_bias = Tensor(model.head_bias.shape());
  return z;
}

std::vector<Tensor*> parameters(CamClassifier& model) {
  std::vector<Tensor*> out;
  for (auto& layer : model.convs) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
  out.push_back(&model.head_weight);
  out.push_back(&model.head_bias);
  return out;
}

std::vector<const Tensor*> parameters(const CamClassifier& model) {
  std::vector<const Tensor*> out;
  for (const auto& layer : model.convs) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
  out.push_back(&model.head_weight);
  out.push_back(&model.head_bias);
  return out;
}

CamForward forward(const CamClassifier& model, const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != model.input_channels()) {
    throw Error(ErrorCode::ShapeMismatch, "image " + shape_string(image.shape()) + " does not fit a " +
                                              std::to_string(model.input_channels()) + "-channel classifier");
  }
  CamForward fwd;
  fwd.activations.reserve(model.convs.size() + 1);
  fwd.activations.push_back(image);
  for (const auto& layer : model.convs) {
    Tensor act = conv::forward(fwd.activations.back(), layer.weight, layer.bias, 1);
    for (auto& v : act.values()) v = v > 0.0 ? v : 0.0;
    fwd.activations.push_back(std::move(act));
  }

  const Tensor& features = fwd.features();
  const std::size_t channels = features.dim(0);
  const std::size_t pixels = features.dim(1) * features.dim(2);
  fwd.pooled.assign(channels, 0.0);
  for (std::size_t k = 0; k < channels; ++k) {
    const double* plane = features.data() + k * pixels;
    double sum = 0.0;
    for (std::size_t p = 0; p < pixels; ++p) sum += plane[p];
    fwd.pooled[k] = sum / static_cast<double>(pixels);
  }

  const std::size_t classes = model.classes();
  fwd.logits.assign(classes, 0.0);
  for (std::size_t c = 0; c < classes; ++c) {
    double z = model.head_bias[c];
    for (std::size_t k = 0; k < channels; ++k) z += model.head_weight[c * channels + k] * fwd.pooled[k];
    fwd.logits[c] = z;
  }
  return fwd;
}

std::vector<double> raw_cam(const CamClassifier& model, const Tensor& features, std::size_t class_index) {
  if (class_index >= model.classes()) {
    throw Error(ErrorCode::OutOfBounds, "class index " + std::to_string(class_index) + " out of range");
  }
  const std::size_t channels = features.dim(0);
  if (channels != model.feature_channels()) {
    throw Error(ErrorCode::ShapeMismatch, "feature maps do not match the classifier head");
  }
  const std::size_t pixels = features.dim(1) * features.dim(2);
  std::vector<double> out(pixels, 0.0);
  for (std::size_t k = 0; k < channels; ++k) {
    const double w = model.head_weight[class_index * channels + k];
    const double* plane = features.data() + k * pixels;
    for (std::size_t p = 0; p < pixels; ++p) out[p] += w * plane[p];
  }
  return out;
}

UnitMap cam(const CamClassifier& model, const Tensor& features, std::size_t class_index) {
  return UnitMap(features.dim(2), features.dim(1), minmax_normalize(raw_cam(model, features, class_index)));
}

std::vector<double> softmax(std::span<const double> logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (auto& v : out) v /= total;
  return out;
}

double cross_entropy(std::span<const double> logits, std::size_t label) {
  if (label >= logits.size()) throw Error(ErrorCode::OutOfBounds, "label out of range");
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double z : logits) total += std::exp(z - peak);
  return std::log(total) - (logits[label] - peak);
}

std::vector<double> cross_entropy_gradient(std::span<const double> logits, std::size_t label) {
  if (label >= logits.size()) throw Error(ErrorCode::OutOfBounds, "label out of range");
  auto g = softmax(logits);
  g[label] -= 1.0;
  return g;
}

void accumulate_backward(const CamClassifier& model, const CamForward& fwd, std::span<const double> d_logits,
                         const Tensor* d_features, CamGradients& grads) {
  const std::size_t classes = model.classes();
  const std::size_t channels = model.feature_channels();
  if (d_logits.size() != classes) throw Error(ErrorCode::ShapeMismatch, "logit gradient size mismatch");
  const Tensor& features = fwd.features();
  if (d_features) require_same_shape(*d_features, features, "feature gradient");

  std::vector<double> d_pooled(channels, 0.0);
  for (std::size_t c = 0; c < classes; ++c) {
    const double g = d_logits[c];
    grads.head_bias[c] += g;
    for (std::size_t k = 0; k < channels; ++k) {
      grads.head_weight[c * channels + k] += g * fwd.pooled[k];
      d_pooled[k] += g * model.head_weight[c * channels + k];
    }
  }

  const std::size_t pixels = features.dim(1) * features.dim(2);
  Tensor d_act(features.shape());
  for (std::size_t k = 0; k < channels; ++k) {
    const double spread = d_pooled[k] / static_cast<double>(pixels);
    double* dst = d_act.data() + k * pixels;
    for (std::size_t p = 0; p < pixels; ++p) dst[p] = spread;
  }
  if (d_features) {
    for (std::size_t i = 0; i < d_act.size(); ++i) d_act[i] += (*d_features)[i];
  }

  for (std::size_t i = model.convs.size(); i-- > 0;) {
    const Tensor& out = fwd.activations[i + 1];
    // ReLU: zero gradient wherever the output is not strictly positive.
    for (std::size_t j = 0; j < d_act.size(); ++j) {
      if (!(out[j] > 0.0)) d_act[j] = 0.0;
    }
    Tensor d_in;
    conv::backward(fwd.activations[i], model.convs[i].weight, d_act, 1, i > 0 ? &d_in : nullptr,
                   grads.convs[i].weight, grads.convs[i].bias);
    d_act = std::move(d_in);
  }
}

CamGradients backward(const CamClassifier& model, const CamForward& fwd, std::span<const double> d_logits,
                      const Tensor* d_features) {
  CamGradients grads = zeros_like(model);
  accumulate_backward(model, fwd, d_logits, d_features, grads);
  return grads;
}

}  // namespace salgrain
