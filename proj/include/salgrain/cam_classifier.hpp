#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "salgrain/saliency_map.hpp"
#include "salgrain/tensor.hpp"

namespace salgrain {

struct ConvLayer {
  Tensor weight;  // [out, in, 3, 3]
  Tensor bias;    // [out]
};

// Stack of 3x3 stride-1 pad-1 conv+ReLU layers, global average pooling and a
// linear head. The pooled head is what makes class activation maps exact.
struct CamClassifier {
  std::vector<ConvLayer> convs;
  Tensor head_weight;  // [classes, channels]
  Tensor head_bias;    // [classes]

  std::size_t input_channels() const { return convs.front().weight.dim(1); }
  std::size_t feature_channels() const { return convs.back().weight.dim(0); }
  std::size_t classes() const { return head_weight.dim(0); }
};

// Gradients share the parameter layout.
using CamGradients = CamClassifier;

struct CamArchitecture {
  std::size_t input_channels = 1;
  std::vector<std::size_t> channels{8, 16, 16};
  std::size_t classes = 2;
};

// Glorot-uniform weights from a seeded generator, zero biases.
CamClassifier make_cam_classifier(const CamArchitecture& arch, std::uint64_t seed);
CamClassifier zeros_like(const CamClassifier& model);

std::vector<Tensor*> parameters(CamClassifier& model);
std::vector<const Tensor*> parameters(const CamClassifier& model);

struct CamForward {
  // activations[0] is the input; activations[i + 1] = relu(conv_i(activations[i])).
  std::vector<Tensor> activations;
  std::vector<double> pooled;
  std::vector<double> logits;

  const Tensor& features() const { return activations.back(); }
};

CamForward forward(const CamClassifier& model, const Tensor& image);

// sum_k head_weight[class_index, k] * features[k, y, x], row-major over (y, x).
std::vector<double> raw_cam(const CamClassifier& model, const Tensor& features, std::size_t class_index);

// raw_cam() min-max normalized to [0,1].
UnitMap cam(const CamClassifier& model, const Tensor& features, std::size_t class_index);

std::vector<double> softmax(std::span<const double> logits);
double cross_entropy(std::span<const double> logits, std::size_t label);
// d CE / d logits = softmax - onehot(label).
std::vector<double> cross_entropy_gradient(std::span<const double> logits, std::size_t label);

// Reverse pass for a scalar loss whose upstream gradients are d_logits and,
// optionally, an extra gradient directly on the final feature maps. Results
// are added to grads.
void accumulate_backward(const CamClassifier& model, const CamForward& fwd, std::span<const double> d_logits,
                         const Tensor* d_features, CamGradients& grads);

CamGradients backward(const CamClassifier& model, const CamForward& fwd, std::span<const double> d_logits,
                      const Tensor* d_features = nullptr);

}  // namespace salgrain
