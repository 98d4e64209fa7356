#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "salgrain/cyborg.hpp"
#include "salgrain/granularity.hpp"
#include "salgrain/mimic.hpp"
#include "salgrain/optimizer.hpp"
#include "salgrain/synth_data.hpp"

namespace salgrain {

enum class SaliencySource { Human, Mimic, SegmenterExternal, None };

std::string_view to_string(SaliencySource source);
std::optional<SaliencySource> parse_saliency_source(std::string_view text);

// How per-sample gradients in a mini-batch combine before the optimizer step.
enum class BatchReduction { Sum, Mean };

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::SGD;
  double learning_rate = 0.005;
  double decay_factor = 0.1;
  std::size_t step_epochs = 12;
  std::size_t epochs = 50;
  std::size_t batch_size = 20;
  BatchReduction reduction = BatchReduction::Sum;

  LrSchedule schedule() const { return {learning_rate, decay_factor, step_epochs}; }
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct ExperimentConfig {
  SaliencySource saliency_source = SaliencySource::Human;
  std::optional<GranularitySpec> granularity;  // absent only for source "none"
  CyborgConfig cyborg;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  TrainConfig train;
  MimicTrainConfig mimic;  // seed is taken from the run seed
  SynthConfig dataset;
  std::optional<std::filesystem::path> manifest;
  std::optional<std::filesystem::path> external_maps_dir;
  std::size_t fpr_grid_size = 101;
};

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

// Source-dependent defaults: human and external maps threshold at > 0 without
// erosion; mimic maps threshold at > 127 and erode before drawing a BOI.
GranularitySpec default_granularity(SaliencySource source, GranularityLevel level = GranularityLevel::AOI);

// Parses JSON text into a fully-defaulted config. Unknown keys are rejected.
// Relative paths are resolved against base_dir.
ExperimentConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig parse_config(const std::filesystem::path& path);

// Canonical JSON with every field spelled out.
std::string serialize_config(const ExperimentConfig& config);

}  // namespace salgrain
