#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "salgrain/saliency_map.hpp"
#include "salgrain/tensor.hpp"

namespace salgrain {

enum class ShiftMode { ArtifactMoved, ArtifactWeakened };

std::string_view to_string(ShiftMode mode);
std::optional<ShiftMode> parse_shift_mode(std::string_view text);

enum class Label : std::uint8_t { Bonafide = 0, Attack = 1 };

struct SynthConfig {
  std::size_t image_size = 32;
  std::size_t n_train = 200;
  std::size_t n_val = 100;
  std::size_t n_test = 200;
  std::size_t n_annotators = 3;
  std::size_t annotator_jitter = 2;
  double annotator_error_rate = 0.1;
  ShiftMode shift_mode = ShiftMode::ArtifactWeakened;
  std::uint64_t seed = 1;

  // Image model.
  double texture_sigma = 3.0;      // Gaussian filter width of the bona fide texture
  double texture_contrast = 0.15;  // texture standard deviation around mid-grey
  double noise_std = 0.05;         // per-pixel sensor noise
  std::size_t artifact_radius = 3;
  double artifact_amplitude = 1.0;
  // Test-split shift.
  double weakened_factor = 0.5;       // amplitude multiplier for ArtifactWeakened
  double held_out_fraction = 1.0 / 3.0;  // right-hand image band reserved for ArtifactMoved

  friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

void validate(const SynthConfig& config);

struct SynthSample {
  std::string id;
  Tensor image;  // [1,H,W] in [0,1]
  Label label = Label::Bonafide;
  std::optional<SaliencyMap> true_foi;      // attack samples only
  std::optional<AnnotationSet> annotations;  // attack samples only
  std::size_t artifact_x = 0;  // attack samples only
  std::size_t artifact_y = 0;
};

struct SynthSplits {
  std::vector<SynthSample> train;
  std::vector<SynthSample> val;
  std::vector<SynthSample> test;
};

SynthSplits generate(const SynthConfig& config);

// 255-peak isotropic Gaussian bump, sigma in pixels, rounded to 8 bits.
SaliencyMap gaussian_bump(std::size_t width, std::size_t height, double cx, double cy, double sigma);

}  // namespace salgrain
