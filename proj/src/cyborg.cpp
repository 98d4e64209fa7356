#include "salgrain/cyborg.hpp"

#include <algorithm>
#include <cmath>

#include "salgrain/error.hpp"

namespace salgrain {

void validate(const CyborgConfig& config) {
  if (!(config.alpha >= 0.0 && config.alpha <= 1.0)) {
    throw Error(ErrorCode::ConfigInvalid, "cyborg.alpha must lie in [0,1]");
  }
}

UnitMap saliency_target(const SaliencyMap& saliency, std::size_t width, std::size_t height) {
  return minmax_normalize(resize_bilinear(to_unit(saliency), width, height));
}

double human_loss_against(const UnitMap& cam, const UnitMap& target) {
  if (cam.width() != target.width() || cam.height() != target.height()) {
    throw Error(ErrorCode::DimensionMismatch, "CAM and saliency target differ in size");
  }
  auto a = cam.values();
  auto b = target.values();
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.size());
}

double human_loss(const UnitMap& cam, const SaliencyMap& saliency) {
  return human_loss_against(cam, saliency_target(saliency, cam.width(), cam.height()));
}

double cyborg_loss(std::span<const double> logits, std::size_t label, const UnitMap& cam,
                   const SaliencyMap& saliency, const CyborgConfig& config) {
  validate(config);
  return config.alpha * human_loss(cam, saliency) + (1.0 - config.alpha) * cross_entropy(logits, label);
}

LossBreakdown accumulate_cross_entropy_gradients(const CamClassifier& model, const Tensor& image, std::size_t label,
                                                 CamGradients& grads) {
  const CamForward fwd = forward(model, image);
  LossBreakdown loss;
  loss.cross_entropy = cross_entropy(fwd.logits, label);
  loss.total = loss.cross_entropy;
  const auto d_logits = cross_entropy_gradient(fwd.logits, label);
  accumulate_backward(model, fwd, d_logits, nullptr, grads);
  return loss;
}

LossBreakdown accumulate_cyborg_gradients(const CamClassifier& model, const Tensor& image, std::size_t label,
                                          const UnitMap* target, const CyborgConfig& config, CamGradients& grads) {
  validate(config);
  if (target == nullptr || config.alpha == 0.0) {
    return accumulate_cross_entropy_gradients(model, image, label, grads);
  }

  const CamForward fwd = forward(model, image);
  const Tensor& features = fwd.features();
  const std::size_t channels = features.dim(0);
  const std::size_t height = features.dim(1);
  const std::size_t width = features.dim(2);
  const std::size_t pixels = width * height;
  if (target->width() != width || target->height() != height) {
    throw Error(ErrorCode::DimensionMismatch, "saliency target is not at CAM resolution");
  }

  const double alpha = config.alpha;
  LossBreakdown loss;
  loss.cross_entropy = cross_entropy(fwd.logits, label);

  const std::vector<double> raw = raw_cam(model, features, label);
  const auto lo = static_cast<std::size_t>(std::min_element(raw.begin(), raw.end()) - raw.begin());
  const auto hi = static_cast<std::size_t>(std::max_element(raw.begin(), raw.end()) - raw.begin());
  const double range = raw[hi] - raw[lo];
  auto t = target->values();

  std::vector<double> d_raw(pixels, 0.0);
  double human = 0.0;
  if (range > 0.0) {
    double sum_g = 0.0;
    double sum_gn = 0.0;
    for (std::size_t p = 0; p < pixels; ++p) {
      const double n = (raw[p] - raw[lo]) / range;
      const double diff = n - t[p];
      human += diff * diff;
      const double g = 2.0 * diff / static_cast<double>(pixels);
      d_raw[p] = g / range;
      sum_g += g;
      sum_gn += g * n;
    }
    d_raw[lo] += (sum_gn - sum_g) / range;
    d_raw[hi] -= sum_gn / range;
    for (auto& v : d_raw) v *= alpha;
  } else {
    // Constant CAM normalizes to zeros; no gradient flows through the CAM path.
    for (std::size_t p = 0; p < pixels; ++p) human += t[p] * t[p];
  }
  loss.human = human / static_cast<double>(pixels);
  loss.total = alpha * loss.human + (1.0 - alpha) * loss.cross_entropy;

  auto d_logits = cross_entropy_gradient(fwd.logits, label);
  for (auto& g : d_logits) g *= (1.0 - alpha);

  Tensor d_features(features.shape());
  for (std::size_t k = 0; k < channels; ++k) {
    const double w = model.head_weight[label * channels + k];
    const double* plane = features.data() + k * pixels;
    double* dst = d_features.data() + k * pixels;
    double d_w = 0.0;
    for (std::size_t p = 0; p < pixels; ++p) {
      dst[p] = w * d_raw[p];
      d_w += d_raw[p] * plane[p];
    }
    grads.head_weight[label * channels + k] += d_w;
  }
  accumulate_backward(model, fwd, d_logits, &d_features, grads);
  return loss;
}

CamGradients cyborg_gradients(const CamClassifier& model, const Tensor& image, std::size_t label,
                              const SaliencyMap& saliency, const CyborgConfig& config) {
  CamGradients grads = zeros_like(model);
  // CAM resolution equals the input resolution for the stride-1 stack.
  const UnitMap target = saliency_target(saliency, image.dim(2), image.dim(1));
  accumulate_cyborg_gradients(model, image, label, &target, config, grads);
  return grads;
}

}  // namespace salgrain
