#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "salgrain/cam_classifier.hpp"
#include "salgrain/saliency_map.hpp"
#include "salgrain/tensor.hpp"

namespace salgrain {

// Image-to-saliency regressor: two stride-2 conv+ReLU encoder layers (1->8->16)
// and two stride-2 transposed-conv decoder layers (16->8->1) with a ReLU between
// them and a sigmoid output. Decoder weights are laid out [in, out, 3, 3].
struct MimicAutoencoder {
  ConvLayer enc1;
  ConvLayer enc2;
  ConvLayer dec1;
  ConvLayer dec2;
};

using MimicGradients = MimicAutoencoder;

MimicAutoencoder make_mimic_autoencoder(std::uint64_t seed);
MimicAutoencoder zeros_like(const MimicAutoencoder& model);
std::vector<Tensor*> parameters(MimicAutoencoder& model);
std::vector<const Tensor*> parameters(const MimicAutoencoder& model);

struct MimicForward {
  Tensor input;
  Tensor h1;      // relu(enc1)
  Tensor h2;      // relu(enc2)
  Tensor h3;      // relu(dec1), cropped to h1's extent
  Tensor output;  // sigmoid(dec2), cropped to the input extent
};

MimicForward forward(const MimicAutoencoder& model, const Tensor& image);

// Mean squared error between the sigmoid output and the unit view of the target.
double mimic_loss(const Tensor& output, const UnitMap& target);

// Adds d(mimic_loss)/d(params) to grads and returns the loss.
double accumulate_mimic_gradients(const MimicAutoencoder& model, const Tensor& image, const UnitMap& target,
                                  MimicGradients& grads);

struct MimicTrainConfig {
  double learning_rate = 0.0001;
  std::size_t epochs = 50;
  std::size_t batch_size = 20;
  std::uint64_t seed = 0;
};

struct MimicPair {
  Tensor image;     // [1,H,W]
  SaliencyMap foi;  // H x W
};

struct MimicTrainResult {
  MimicAutoencoder model;
  double initial_mse = 0.0;
  double final_mse = 0.0;
};

MimicTrainResult train_mimic(std::span<const MimicPair> pairs, const MimicTrainConfig& config);

double mean_mimic_loss(const MimicAutoencoder& model, std::span<const MimicPair> pairs);

// Sigmoid output scaled to 0..255 and rounded.
SaliencyMap generate_saliency(const MimicAutoencoder& model, const Tensor& image);

void save_mimic(const std::filesystem::path& path, const MimicAutoencoder& model);
MimicAutoencoder load_mimic(const std::filesystem::path& path);

}  // namespace salgrain
