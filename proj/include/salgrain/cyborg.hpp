#pragma once

#include <cstddef>
#include <span>

#include "salgrain/cam_classifier.hpp"
#include "salgrain/saliency_map.hpp"
#include "salgrain/tensor.hpp"

namespace salgrain {

struct CyborgConfig {
  double alpha = 0.5;  // weight of the human-saliency term
};

void validate(const CyborgConfig& config);

// Saliency brought to CAM resolution (bilinear on the unit view) and min-max normalized.
UnitMap saliency_target(const SaliencyMap& saliency, std::size_t width, std::size_t height);

// Mean squared difference between the CAM and the normalized saliency target.
double human_loss(const UnitMap& cam, const SaliencyMap& saliency);
double human_loss_against(const UnitMap& cam, const UnitMap& target);

// alpha * human_loss + (1 - alpha) * cross_entropy
double cyborg_loss(std::span<const double> logits, std::size_t label, const UnitMap& cam,
                   const SaliencyMap& saliency, const CyborgConfig& config);

struct LossBreakdown {
  double total = 0.0;
  double cross_entropy = 0.0;
  double human = 0.0;
};

// Adds the gradient of the composite loss for one sample to grads. The CAM is
// taken for the sample's own label. Min/max pixels of the CAM normalization are
// held at their forward positions. A null target means the sample carries no
// saliency and contributes plain cross-entropy.
LossBreakdown accumulate_cyborg_gradients(const CamClassifier& model, const Tensor& image, std::size_t label,
                                          const UnitMap* target, const CyborgConfig& config, CamGradients& grads);

CamGradients cyborg_gradients(const CamClassifier& model, const Tensor& image, std::size_t label,
                              const SaliencyMap& saliency, const CyborgConfig& config);

// Plain cross-entropy gradient; the baseline ("None") training path.
LossBreakdown accumulate_cross_entropy_gradients(const CamClassifier& model, const Tensor& image, std::size_t label,
                                                 CamGradients& grads);

}  // namespace salgrain
