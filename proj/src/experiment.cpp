#include "salgrain/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>
#include <utility>

#include "salgrain/checkpoint.hpp"
#include "salgrain/cyborg.hpp"
#include "salgrain/error.hpp"
#include "salgrain/granularity.hpp"
#include "salgrain/manifest.hpp"
#include "salgrain/mimic.hpp"
#include "salgrain/pgm.hpp"

namespace salgrain {

namespace {

std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}

constexpr std::uint64_t kSecondSplitSalt = 0x5eed0000b0b0b0b0ULL;
constexpr std::uint64_t kShuffleSalt = 0x73687566666c65ULL;

void scale(CamGradients& grads, double factor) {
  for (Tensor* t : parameters(grads)) {
    for (auto& v : t->values()) v *= factor;
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  return out;
}

}  // namespace

void Logger::warn(const std::string& message) const {
  if (quiet) return;
  std::lock_guard lock(log_mutex());
  std::cerr << "warning: " << message << '\n';
}

void Logger::info(const std::string& message) const {
  if (quiet) return;
  std::lock_guard lock(log_mutex());
  std::cerr << message << '\n';
}

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw Error(ErrorCode::NumericFailure, "cannot format value");
  return std::string(buf, end);
}

Dataset from_synthetic(SynthSplits splits) {
  auto convert = [](std::vector<SynthSample>& samples) {
    std::vector<Example> out;
    out.reserve(samples.size());
    for (auto& s : samples) {
      out.push_back({std::move(s.id), std::move(s.image), s.label, std::nullopt, std::move(s.annotations)});
    }
    return out;
  };
  Dataset d;
  d.train = convert(splits.train);
  d.val = convert(splits.val);
  d.test = convert(splits.test);
  return d;
}

Dataset load_manifest_dataset(const std::filesystem::path& manifest_path) {
  const Manifest m = read_manifest(manifest_path);
  Dataset d;
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    const auto& row = m.rows[i];
    Example ex;
    ex.id = std::filesystem::path(row.image_path).stem().string();
    ex.image = gray_to_image(read_pgm(m.base_dir / row.image_path));
    ex.label = row.label == 1 ? Label::Attack : Label::Bonafide;
    if (!row.saliency_path.empty()) ex.foi = read_pgm(m.base_dir / row.saliency_path);
    if (!row.annotator_paths.empty()) {
      AnnotationSet ann;
      ann.sample_id = ex.id;
      for (const auto& p : row.annotator_paths) ann.annotator_maps.push_back(read_pgm(m.base_dir / p));
      ann.annotator_correct = row.correct_flags;
      ex.annotations = std::move(ann);
    }
    auto& dst = row.split == "train" ? d.train : row.split == "val" ? d.val : row.split == "test" ? d.test : d.train_b;
    dst.push_back(std::move(ex));
  }
  if (d.train.empty()) throw Error(ErrorCode::EmptyDataset, "manifest has no train rows");
  if (d.test.empty()) throw Error(ErrorCode::EmptyDataset, "manifest has no test rows");
  return d;
}

CamClassifier train_classifier(std::span<const TrainingExample> data, const TrainConfig& train,
                               const CyborgConfig& cyborg, bool use_saliency, std::uint64_t seed,
                               TrainSummary* summary, const StepObserver& observer) {
  if (data.empty()) throw Error(ErrorCode::EmptyDataset, "no training examples");
  validate(cyborg);
  const auto& shape = data.front().image->shape();
  for (const auto& ex : data) {
    if (ex.image->shape() != shape) throw Error(ErrorCode::DimensionMismatch, "training images differ in size");
  }

  CamArchitecture arch;
  arch.input_channels = shape.at(0);
  CamClassifier model = make_cam_classifier(arch, seed);
  const LrSchedule schedule = train.schedule();
  Optimizer optimizer(train.optimizer, schedule_rate(schedule, 0));
  std::mt19937_64 rng(seed ^ kShuffleSalt);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto params = parameters(model);
  std::size_t steps = 0;

  for (std::size_t epoch = 0; epoch < train.epochs; ++epoch) {
    optimizer.set_learning_rate(schedule_rate(schedule, epoch));
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += train.batch_size) {
      const std::size_t end = std::min(order.size(), start + train.batch_size);
      CamGradients grads = zeros_like(model);
      for (std::size_t i = start; i < end; ++i) {
        const TrainingExample& ex = data[order[i]];
        const LossBreakdown loss =
            use_saliency ? accumulate_cyborg_gradients(model, *ex.image, ex.label,
                                                       ex.target ? &*ex.target : nullptr, cyborg, grads)
                         : accumulate_cross_entropy_gradients(model, *ex.image, ex.label, grads);
        if (!std::isfinite(loss.total)) {
          throw Error(ErrorCode::NumericFailure, "non-finite loss at epoch " + std::to_string(epoch));
        }
        epoch_loss += loss.total;
      }
      if (train.reduction == BatchReduction::Mean) scale(grads, 1.0 / static_cast<double>(end - start));
      const auto grad_params = parameters(std::as_const(grads));
      optimizer.step(params, grad_params);
      ++steps;
      if (observer) observer(steps, model);
    }
    if (summary) summary->epoch_loss.push_back(epoch_loss / static_cast<double>(data.size()));
  }
  for (const Tensor* p : parameters(std::as_const(model))) {
    if (!p->all_finite()) throw Error(ErrorCode::NumericFailure, "training produced non-finite parameters");
  }
  if (summary) summary->steps = steps;
  return model;
}

double attack_score(const CamClassifier& model, const Tensor& image) {
  const CamForward fwd = forward(model, image);
  return softmax(fwd.logits).at(static_cast<std::size_t>(Label::Attack));
}

ScoredSet score(const CamClassifier& model, std::span<const Example> examples) {
  ScoredSet set;
  for (const auto& ex : examples) {
    set.scores.push_back(attack_score(model, ex.image));
    set.labels.push_back(ex.label == Label::Attack);
  }
  return set;
}

std::optional<SaliencyMap> human_foi(const Example& ex, const Logger& log) {
  if (ex.foi) return ex.foi;
  if (!ex.annotations) return std::nullopt;
  try {
    return aggregate_annotations(*ex.annotations);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoCorrectAnnotations) throw;
    log.warn(std::string(e.what()) + "; sample trains without saliency");
    return std::nullopt;
  }
}

SaliencyAssignment assign_saliency(const ExperimentConfig& config, Dataset& data, std::uint64_t seed,
                                   const Logger& log) {
  SaliencyAssignment out;
  switch (config.saliency_source) {
    case SaliencySource::None:
      out.train = data.train;
      out.foi.assign(out.train.size(), std::nullopt);
      break;
    case SaliencySource::Human:
      out.train = data.train;
      for (const auto& ex : out.train) out.foi.push_back(human_foi(ex, log));
      break;
    case SaliencySource::SegmenterExternal: {
      out.train = data.train;
      for (const auto& ex : out.train) {
        const auto path = *config.external_maps_dir / (ex.id + ".pgm");
        if (std::filesystem::exists(path)) out.foi.push_back(read_pgm(path)); else out.foi.push_back(std::nullopt);
      }
      break;
    }
    case SaliencySource::Mimic: {
      std::vector<MimicPair> pairs;
      for (const auto& ex : data.train) {
        if (auto foi = human_foi(ex, log)) pairs.push_back({ex.image, std::move(*foi)});
      }
      if (pairs.empty()) throw Error(ErrorCode::EmptyDataset, "no human FOI maps to train the mimic on");
      MimicTrainConfig mcfg = config.mimic;
      mcfg.seed = seed;
      out.mimic = train_mimic(pairs, mcfg);
      log.info("seed " + std::to_string(seed) + ": mimic MSE " + format_double(out.mimic->initial_mse) + " -> " +
               format_double(out.mimic->final_mse));
      if (data.train_b.empty()) {
        log.warn("no second training split; mimic saliency is generated for the first split");
        out.train = data.train;
      } else {
        out.train = data.train_b;
      }
      for (const auto& ex : out.train) {
        if (ex.label == Label::Attack) {
          out.foi.push_back(generate_saliency(out.mimic->model, ex.image));
        } else {
          out.foi.push_back(std::nullopt);
        }
      }
      break;
    }
  }
  return out;
}

std::uint64_t second_split_seed(std::uint64_t seed) { return seed ^ kSecondSplitSalt; }

namespace {

std::vector<Example> second_split(SynthConfig synth) {
  synth.seed = second_split_seed(synth.seed);
  std::vector<Example> out = from_synthetic(generate(synth)).train;
  for (auto& ex : out) {
    ex.id = "trainb" + ex.id.substr(ex.id.find('_'));
    if (ex.annotations) ex.annotations->sample_id = ex.id;
  }
  return out;
}

}  // namespace

Dataset prepare_dataset(const ExperimentConfig& config, std::uint64_t seed) {
  if (config.manifest) return load_manifest_dataset(*config.manifest);
  SynthConfig synth = config.dataset;
  synth.seed = seed;
  Dataset data = from_synthetic(generate(synth));
  if (config.saliency_source == SaliencySource::Mimic) data.train_b = second_split(synth);
  return data;
}

std::filesystem::path write_synthetic_dataset(const SynthConfig& config, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  SynthSplits splits = generate(config);
  SynthConfig second = config;
  second.seed = second_split_seed(config.seed);
  SynthSplits extra = generate(second);
  for (auto& s : extra.train) {
    s.id = "trainb" + s.id.substr(s.id.find('_'));
    if (s.annotations) s.annotations->sample_id = s.id;
  }

  fs::create_directories(dir / "images");
  fs::create_directories(dir / "annotations");
  fs::create_directories(dir / "foi");
  Manifest manifest;
  manifest.base_dir = dir;
  auto emit = [&](const std::vector<SynthSample>& samples, const std::string& split) {
    for (const auto& s : samples) {
      ManifestRow row;
      row.split = split;
      row.image_path = "images/" + s.id + ".pgm";
      row.label = s.label == Label::Attack ? 1 : 0;
      write_pgm(image_to_gray(s.image), dir / row.image_path);
      if (s.true_foi) write_pgm(*s.true_foi, dir / "foi" / (s.id + ".pgm"));
      if (s.annotations) {
        for (std::size_t a = 0; a < s.annotations->annotator_maps.size(); ++a) {
          const std::string path = "annotations/" + s.id + "_a" + std::to_string(a) + ".pgm";
          write_pgm(s.annotations->annotator_maps[a], dir / path);
          row.annotator_paths.push_back(path);
          row.correct_flags.push_back(s.annotations->annotator_correct[a]);
        }
      }
      manifest.rows.push_back(std::move(row));
    }
  };
  emit(splits.train, "train");
  emit(splits.val, "val");
  emit(splits.test, "test");
  emit(extra.train, "train_b");
  const fs::path path = dir / "manifest.csv";
  write_manifest(manifest, path);
  return path;
}

RunResult run_seed(const ExperimentConfig& config, std::uint64_t seed, const Logger& log) {
  Dataset data = prepare_dataset(config, seed);
  SaliencyAssignment assigned = assign_saliency(config, data, seed, log);
  std::vector<TrainingExample> examples;
  examples.reserve(assigned.train.size());
  std::size_t fallbacks = 0;
  for (std::size_t i = 0; i < assigned.train.size(); ++i) {
    const Example& ex = assigned.train[i];
    TrainingExample te{&ex.image, static_cast<std::size_t>(ex.label), std::nullopt};
    if (assigned.foi[i] && config.granularity) {
      const SaliencyMap& foi = *assigned.foi[i];
      bool fell_back = false;
      const SaliencyMap derived = derive_or_full(foi, *config.granularity, &fell_back);
      if (fell_back) {
        ++fallbacks;
        log.warn("sample " + ex.id + ": empty BOI, using the full-image rectangle");
      }
      te.target = saliency_target(derived, ex.image.dim(2), ex.image.dim(1));
    }
    examples.push_back(std::move(te));
  }

  RunResult result;
  result.seed = seed;
  result.model = train_classifier(examples, config.train, config.cyborg,
                                  config.saliency_source != SaliencySource::None, seed);
  result.mimic = std::move(assigned.mimic);
  if (!data.val.empty()) {
    result.val = score(result.model, data.val);
    result.val_auc = auc(result.val);
  }
  result.test = score(result.model, data.test);
  result.test_auc = auc(result.test);
  for (std::size_t i = 0; i < data.test.size(); ++i) result.test_scores.emplace_back(data.test[i].id, result.test.scores[i]);
  return result;
}

std::string granularity_label(const ExperimentConfig& config) {
  if (config.saliency_source == SaliencySource::None || !config.granularity) return "none";
  return std::string(to_string(config.granularity->level));
}

std::size_t worker_count(std::size_t jobs, std::size_t requested) {
  std::size_t n = requested;
  if (n == 0) {
    if (const char* env = std::getenv("FORGE_THREADS")) {
      char* end = nullptr;
      const long v = std::strtol(env, &end, 10);
      if (end != env && v > 0) n = static_cast<std::size_t>(v);
    }
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(n, jobs));
}

ExperimentResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                                const RunOptions& options) {
  if (config.seeds.empty()) throw Error(ErrorCode::ConfigInvalid, "no seeds configured");
  const Logger log{options.quiet};
  std::vector<std::uint64_t> seeds = config.seeds;
  std::sort(seeds.begin(), seeds.end());

  std::vector<std::optional<RunResult>> slots(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        log.info("seed " + std::to_string(seeds[i]) + ": training");
        slots[i] = run_seed(config, seeds[i], log);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = worker_count(seeds.size(), options.threads);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ExperimentResult result;
  std::vector<ScoredSet> test_sets;
  for (auto& slot : slots) {
    test_sets.push_back(slot->test);
    result.runs.push_back(std::move(*slot));
  }
  result.report = summarize_runs(test_sets, config.fpr_grid_size);

  std::filesystem::create_directories(out_dir);
  const std::string source(to_string(config.saliency_source));
  const std::string level = granularity_label(config);
  {
    auto out = open_out(out_dir / "report.csv");
    out << "source,granularity,seed,auc\n";
    for (std::size_t i = 0; i < result.runs.size(); ++i) {
      out << source << ',' << level << ',' << result.runs[i].seed << ',' << format_double(result.report.per_run_auc[i])
          << '\n';
    }
  }
  {
    auto out = open_out(out_dir / "summary.csv");
    out << "mean,std\n" << format_double(result.report.mean) << ',' << format_double(result.report.std) << '\n';
  }
  {
    auto out = open_out(out_dir / "roc.csv");
    out << "fpr,mean_tpr,std_tpr\n";
    for (std::size_t g = 0; g < result.report.fpr_grid.size(); ++g) {
      out << format_double(result.report.fpr_grid[g]) << ',' << format_double(result.report.mean_tpr[g]) << ','
          << format_double(result.report.std_tpr[g]) << '\n';
    }
  }
  {
    auto out = open_out(out_dir / "validation.csv");
    out << "seed,val_auc,test_auc\n";
    for (const auto& run : result.runs) {
      out << run.seed << ',' << (run.val.scores.empty() ? std::string() : format_double(run.val_auc)) << ','
          << format_double(run.test_auc) << '\n';
    }
  }
  for (const auto& run : result.runs) {
    const std::string tag = "seed" + std::to_string(run.seed);
    auto out = open_out(out_dir / ("scores_" + tag + ".csv"));
    out << "id,label,score\n";
    for (std::size_t i = 0; i < run.test_scores.size(); ++i) {
      out << run.test_scores[i].first << ',' << (run.test.labels[i] ? 1 : 0) << ','
          << format_double(run.test_scores[i].second) << '\n';
    }
    save_cam_classifier(out_dir / ("model_" + tag + ".ckpt"), run.model);
    if (run.mimic) save_mimic(out_dir / ("mimic_" + tag + ".ckpt"), run.mimic->model);
  }
  return result;
}

}  // namespace salgrain
