#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "salgrain/cam_classifier.hpp"
#include "salgrain/config.hpp"
#include "salgrain/eval.hpp"
#include "salgrain/mimic.hpp"
#include "salgrain/saliency_map.hpp"
#include "salgrain/synth_data.hpp"

namespace salgrain {

// Progress and warning lines on stderr, silenced by quiet.
struct Logger {
  bool quiet = false;
  void warn(const std::string& message) const;
  void info(const std::string& message) const;
};

struct Example {
  std::string id;
  Tensor image;  // [1,H,W]
  Label label = Label::Bonafide;
  std::optional<SaliencyMap> foi;            // precomputed FOI, if supplied
  std::optional<AnnotationSet> annotations;  // raw annotator maps, if supplied
};

struct Dataset {
  std::vector<Example> train;
  std::vector<Example> val;
  std::vector<Example> test;
  std::vector<Example> train_b;  // second training split for mimic-sourced runs
};

Dataset from_synthetic(SynthSplits splits);
Dataset load_manifest_dataset(const std::filesystem::path& manifest_path);

// Generator seed of the second training split used by mimic-sourced runs.
std::uint64_t second_split_seed(std::uint64_t seed);

// Manifest dataset when configured, otherwise the synthetic splits for seed
// (plus train_b for mimic-sourced runs).
Dataset prepare_dataset(const ExperimentConfig& config, std::uint64_t seed);

// Writes images/, annotations/ and foi/ (ground-truth maps named <id>.pgm)
// plus manifest.csv for the synthetic splits and the second training split.
// Returns the manifest path.
std::filesystem::path write_synthetic_dataset(const SynthConfig& config, const std::filesystem::path& dir);

// Human FOI of an example: the supplied map, else the annotator aggregate.
// Samples whose annotators are all flagged incorrect yield nothing.
std::optional<SaliencyMap> human_foi(const Example& example, const Logger& log);

// Training example as seen by the classifier: a derived, normalized saliency
// target at CAM resolution, or none.
struct TrainingExample {
  const Tensor* image = nullptr;
  std::size_t label = 0;
  std::optional<UnitMap> target;
};

// Called after every optimizer step with the 1-based step count.
using StepObserver = std::function<void(std::size_t step, const CamClassifier& model)>;

struct TrainSummary {
  std::vector<double> epoch_loss;  // mean per-sample loss per epoch
  std::size_t steps = 0;
};

// Mini-batch training with the composite loss (plain cross-entropy when
// use_saliency is false). Per-sample gradients are summed (or averaged, per
// train.reduction) in a fixed order; shuffling is seeded.
CamClassifier train_classifier(std::span<const TrainingExample> data, const TrainConfig& train,
                               const CyborgConfig& cyborg, bool use_saliency, std::uint64_t seed,
                               TrainSummary* summary = nullptr, const StepObserver& observer = {});

// Softmax probability of the attack class.
double attack_score(const CamClassifier& model, const Tensor& image);
ScoredSet score(const CamClassifier& model, std::span<const Example> examples);

// FOI payload for each training example under the configured source (empty
// optional when a sample carries none). For mimic runs this trains the
// autoencoder and returns the maps it generates for train_b.
struct SaliencyAssignment {
  std::vector<Example> train;                 // the examples the classifier trains on
  std::vector<std::optional<SaliencyMap>> foi;  // parallel to train
  std::optional<MimicTrainResult> mimic;
};

SaliencyAssignment assign_saliency(const ExperimentConfig& config, Dataset& data, std::uint64_t seed,
                                   const Logger& log);

struct RunResult {
  std::uint64_t seed = 0;
  ScoredSet val;
  ScoredSet test;
  double val_auc = 0.0;
  double test_auc = 0.0;
  std::vector<std::pair<std::string, double>> test_scores;  // (sample id, score)
  CamClassifier model;
  std::optional<MimicTrainResult> mimic;
};

RunResult run_seed(const ExperimentConfig& config, std::uint64_t seed, const Logger& log);

struct ExperimentResult {
  std::vector<RunResult> runs;  // sorted by seed
  EvalReport report;            // over shifted-test scores
};

struct RunOptions {
  bool quiet = false;
  std::size_t threads = 0;  // 0 = FORGE_THREADS or hardware concurrency
};

// Runs every seed and writes report.csv, summary.csv, roc.csv,
// validation.csv, per-seed score files and checkpoints into out_dir.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                                const RunOptions& options = {});

std::string granularity_label(const ExperimentConfig& config);
std::size_t worker_count(std::size_t jobs, std::size_t requested);

// Shortest round-trip decimal form.
std::string format_double(double value);

}  // namespace salgrain
