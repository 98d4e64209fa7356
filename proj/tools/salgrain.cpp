#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "salgrain/checkpoint.hpp"
#include "salgrain/config.hpp"
#include "salgrain/error.hpp"
#include "salgrain/eval.hpp"
#include "salgrain/experiment.hpp"
#include "salgrain/granularity.hpp"
#include "salgrain/mimic.hpp"
#include "salgrain/pgm.hpp"
#include "salgrain/saliency_map.hpp"

namespace fs = std::filesystem;
using namespace salgrain;

namespace {

struct Globals {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

ExperimentConfig load_config(const Globals& g) {
  ExperimentConfig config = g.config_path.empty() ? ExperimentConfig{} : parse_config(g.config_path);
  if (g.config_path.empty() && !config.granularity) config.granularity = default_granularity(config.saliency_source);
  if (g.seed) {
    config.seeds = {*g.seed};
    config.dataset.seed = *g.seed;
  }
  return config;
}

std::string quoted(const std::string& text) {
  std::string out;
  for (char c : text) {
    if (c == '"' || c == '\\') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out;
}

int report_error(std::string_view code, const std::string& message, int exit_code) {
  std::cerr << "error: code=" << code << " message=\"" << quoted(message) << "\"\n";
  return exit_code;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  return out;
}

std::vector<bool> parse_flags(const std::string& text, std::size_t count) {
  if (text.empty()) return std::vector<bool>(count, true);
  std::vector<bool> flags;
  for (char c : text) {
    if (c == '1') flags.push_back(true);
    else if (c == '0') flags.push_back(false);
    else if (c != ',' && c != ';') throw Error(ErrorCode::ConfigInvalid, "flags must be 0/1 separated by commas");
  }
  if (flags.size() != count) throw Error(ErrorCode::ConfigInvalid, "one flag is needed per annotator map");
  return flags;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Saliency-granularity training and evaluation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "JSON experiment config");
  app.add_option("--out", g.out_dir, "output directory or file");
  app.add_option("--seed", g.seed, "override the seed list with a single seed");
  app.add_flag("--quiet", g.quiet, "suppress progress and warnings");

  auto* gen = app.add_subcommand("gen-data", "write a synthetic dataset with manifest.csv");

  auto* agg = app.add_subcommand("aggregate", "average correct annotator maps into an FOI map");
  std::vector<std::string> agg_inputs;
  std::string agg_flags;
  agg->add_option("maps", agg_inputs, "annotator PGM maps")->required();
  agg->add_option("--flags", agg_flags, "per-map correctness, e.g. 1,1,0");

  auto* tr = app.add_subcommand("transform", "derive FOI, AOI or BOI from an FOI map");
  std::string tr_input, tr_level = "AOI", tr_threshold = "positive";
  bool tr_erode = false;
  tr->add_option("input", tr_input, "FOI PGM map")->required();
  tr->add_option("--level", tr_level, "FOI, AOI or BOI");
  tr->add_option("--threshold", tr_threshold, "positive (>0) or half (>127)");
  tr->add_flag("--erode", tr_erode, "erode once before drawing the BOI");

  auto* train = app.add_subcommand("train", "train one classifier and report validation/test AUC");

  auto* tmimic = app.add_subcommand("train-mimic", "train the saliency mimic on human FOI maps");

  auto* mgen = app.add_subcommand("mimic-generate", "generate FOI maps with a trained mimic");
  std::string mgen_model;
  std::vector<std::string> mgen_inputs;
  mgen->add_option("--model", mgen_model, "mimic checkpoint")->required();
  mgen->add_option("images", mgen_inputs, "input PGM images")->required();

  auto* eval = app.add_subcommand("evaluate", "score a split with a trained classifier");
  std::string eval_model, eval_split = "test";
  eval->add_option("--model", eval_model, "classifier checkpoint")->required();
  eval->add_option("--split", eval_split, "val or test")->check(CLI::IsMember({"val", "test"}));

  auto* exp = app.add_subcommand("experiment", "run every seed and write the report files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report_error("ParseError", e.what(), 2);
  }

  const Logger log{g.quiet};
  const fs::path out = g.out_dir;
  try {
    if (gen->parsed()) {
      const ExperimentConfig config = load_config(g);
      const fs::path manifest = write_synthetic_dataset(config.dataset, out);
      log.info("wrote " + manifest.string());
    } else if (agg->parsed()) {
      AnnotationSet set;
      set.sample_id = fs::path(agg_inputs.front()).stem().string();
      for (const auto& p : agg_inputs) set.annotator_maps.push_back(read_pgm(p));
      set.annotator_correct = parse_flags(agg_flags, agg_inputs.size());
      write_pgm(aggregate_annotations(set), out);
    } else if (tr->parsed()) {
      const auto level = parse_granularity_level(tr_level);
      const auto mode = parse_threshold_mode(tr_threshold);
      if (!level) throw Error(ErrorCode::ConfigInvalid, "unknown level " + tr_level);
      if (!mode) throw Error(ErrorCode::ConfigInvalid, "unknown threshold mode " + tr_threshold);
      write_pgm(derive(read_pgm(tr_input), {*level, *mode, tr_erode}), out);
    } else if (train->parsed()) {
      const ExperimentConfig config = load_config(g);
      const std::uint64_t seed = config.seeds.front();
      RunResult run = run_seed(config, seed, log);
      fs::create_directories(out);
      save_cam_classifier(out / ("model_seed" + std::to_string(seed) + ".ckpt"), run.model);
      if (run.mimic) save_mimic(out / ("mimic_seed" + std::to_string(seed) + ".ckpt"), run.mimic->model);
      std::cout << "seed=" << seed << " val_auc=" << (run.val.scores.empty() ? "" : format_double(run.val_auc))
                << " test_auc=" << format_double(run.test_auc) << '\n';
    } else if (tmimic->parsed()) {
      const ExperimentConfig config = load_config(g);
      const std::uint64_t seed = config.seeds.front();
      const Dataset data = prepare_dataset(config, seed);
      auto pairs_of = [&](const std::vector<Example>& examples) {
        std::vector<MimicPair> pairs;
        for (const auto& ex : examples) {
          if (ex.label != Label::Attack) continue;
          if (auto foi = human_foi(ex, log)) pairs.push_back({ex.image, std::move(*foi)});
        }
        return pairs;
      };
      const auto train_pairs = pairs_of(data.train);
      MimicTrainConfig mcfg = config.mimic;
      mcfg.seed = seed;
      const MimicTrainResult result = train_mimic(train_pairs, mcfg);
      fs::create_directories(out);
      save_mimic(out / ("mimic_seed" + std::to_string(seed) + ".ckpt"), result.model);
      std::cout << "train_mse_initial=" << format_double(result.initial_mse)
                << " train_mse_final=" << format_double(result.final_mse);
      const auto held_out = pairs_of(data.val);
      if (!held_out.empty()) {
        const MimicAutoencoder untrained = make_mimic_autoencoder(seed);
        std::cout << " heldout_mse_initial=" << format_double(mean_mimic_loss(untrained, held_out))
                  << " heldout_mse_final=" << format_double(mean_mimic_loss(result.model, held_out));
      }
      std::cout << '\n';
    } else if (mgen->parsed()) {
      const MimicAutoencoder model = load_mimic(mgen_model);
      fs::create_directories(out);
      for (const auto& p : mgen_inputs) {
        const Tensor image = gray_to_image(read_pgm(p));
        write_pgm(generate_saliency(model, image), out / fs::path(p).filename());
      }
    } else if (eval->parsed()) {
      const ExperimentConfig config = load_config(g);
      const CamClassifier model = load_cam_classifier(eval_model);
      const Dataset data = prepare_dataset(config, config.seeds.front());
      const auto& examples = eval_split == "val" ? data.val : data.test;
      const ScoredSet scored = score(model, examples);
      fs::create_directories(out);
      auto csv = open_out(out / ("scores_" + eval_split + ".csv"));
      csv << "id,label,score\n";
      for (std::size_t i = 0; i < examples.size(); ++i) {
        csv << examples[i].id << ',' << (scored.labels[i] ? 1 : 0) << ',' << format_double(scored.scores[i]) << '\n';
      }
      std::cout << "auc=" << format_double(auc(scored)) << '\n';
    } else if (exp->parsed()) {
      const ExperimentConfig config = load_config(g);
      const ExperimentResult result = run_experiment(config, out, {g.quiet, 0});
      std::cout << "mean_auc=" << format_double(result.report.mean) << " std_auc=" << format_double(result.report.std)
                << '\n';
    }
  } catch (const Error& e) {
    return report_error(to_string(e.code()), e.what(), exit_code_for(e.code()));
  } catch (const std::exception& e) {
    return report_error("IoError", e.what(), 3);
  }
  return 0;
}
