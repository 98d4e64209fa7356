#include "salgrain/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "salgrain/error.hpp"

namespace salgrain {

namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& key, const std::string& msg) {
  throw Error(ErrorCode::ParseError, "config key '" + key + "': " + msg);
}

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) invalid(where, "expected an object");
  const std::set<std::string> known(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items()) {
    if (!known.contains(key)) {
      throw Error(ErrorCode::UnknownKey, "unknown config key '" + (where.empty() ? key : where + "." + key) + "'");
    }
  }
}

std::string qualify(const std::string& where, const char* key) { return where.empty() ? key : where + "." + key; }

double get_number(const json& obj, const std::string& where, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) invalid(qualify(where, key), "expected a number");
  return v.get<double>();
}

std::uint64_t get_count(const json& obj, const std::string& where, const char* key, std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_unsigned()) invalid(qualify(where, key), "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

std::string get_string(const json& obj, const std::string& where, const char* key, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_string()) invalid(qualify(where, key), "expected a string");
  return v.get<std::string>();
}

void require(bool ok, const std::string& key, const std::string& msg) {
  if (!ok) invalid(key, msg);
}

SynthConfig parse_dataset(const json& d, SynthConfig c) {
  reject_unknown(d, "dataset",
                 {"image_size", "n_train", "n_val", "n_test", "n_annotators", "annotator_jitter",
                  "annotator_error_rate", "shift_mode", "seed", "texture_sigma", "texture_contrast", "noise_std",
                  "artifact_radius", "artifact_amplitude", "weakened_factor", "held_out_fraction", "manifest"});
  const std::string w = "dataset";
  c.image_size = get_count(d, w, "image_size", c.image_size);
  c.n_train = get_count(d, w, "n_train", c.n_train);
  c.n_val = get_count(d, w, "n_val", c.n_val);
  c.n_test = get_count(d, w, "n_test", c.n_test);
  c.n_annotators = get_count(d, w, "n_annotators", c.n_annotators);
  c.annotator_jitter = get_count(d, w, "annotator_jitter", c.annotator_jitter);
  c.annotator_error_rate = get_number(d, w, "annotator_error_rate", c.annotator_error_rate);
  const auto shift = parse_shift_mode(get_string(d, w, "shift_mode", std::string(to_string(c.shift_mode))));
  require(shift.has_value(), "dataset.shift_mode", "expected artifact_moved or artifact_weakened");
  c.shift_mode = *shift;
  c.seed = get_count(d, w, "seed", c.seed);
  c.texture_sigma = get_number(d, w, "texture_sigma", c.texture_sigma);
  c.texture_contrast = get_number(d, w, "texture_contrast", c.texture_contrast);
  c.noise_std = get_number(d, w, "noise_std", c.noise_std);
  c.artifact_radius = get_count(d, w, "artifact_radius", c.artifact_radius);
  c.artifact_amplitude = get_number(d, w, "artifact_amplitude", c.artifact_amplitude);
  c.weakened_factor = get_number(d, w, "weakened_factor", c.weakened_factor);
  c.held_out_fraction = get_number(d, w, "held_out_fraction", c.held_out_fraction);
  try {
    validate(c);
  } catch (const Error& e) {
    throw Error(ErrorCode::ParseError, std::string("dataset: ") + e.what());
  }
  return c;
}

json dataset_json(const SynthConfig& c) {
  return json{{"image_size", c.image_size},
              {"n_train", c.n_train},
              {"n_val", c.n_val},
              {"n_test", c.n_test},
              {"n_annotators", c.n_annotators},
              {"annotator_jitter", c.annotator_jitter},
              {"annotator_error_rate", c.annotator_error_rate},
              {"shift_mode", std::string(to_string(c.shift_mode))},
              {"seed", c.seed},
              {"texture_sigma", c.texture_sigma},
              {"texture_contrast", c.texture_contrast},
              {"noise_std", c.noise_std},
              {"artifact_radius", c.artifact_radius},
              {"artifact_amplitude", c.artifact_amplitude},
              {"weakened_factor", c.weakened_factor},
              {"held_out_fraction", c.held_out_fraction}};
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

std::string_view to_string(SaliencySource source) {
  switch (source) {
    case SaliencySource::Human: return "human";
    case SaliencySource::Mimic: return "mimic";
    case SaliencySource::SegmenterExternal: return "segmenter_external";
    case SaliencySource::None: return "none";
  }
  return "?";
}

std::optional<SaliencySource> parse_saliency_source(std::string_view text) {
  if (text == "human") return SaliencySource::Human;
  if (text == "mimic") return SaliencySource::Mimic;
  if (text == "segmenter_external") return SaliencySource::SegmenterExternal;
  if (text == "none") return SaliencySource::None;
  return std::nullopt;
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return a.saliency_source == b.saliency_source && a.granularity == b.granularity &&
         a.cyborg.alpha == b.cyborg.alpha && a.seeds == b.seeds && a.train == b.train &&
         a.mimic.learning_rate == b.mimic.learning_rate && a.mimic.epochs == b.mimic.epochs &&
         a.mimic.batch_size == b.mimic.batch_size && a.dataset == b.dataset && a.manifest == b.manifest &&
         a.external_maps_dir == b.external_maps_dir && a.fpr_grid_size == b.fpr_grid_size;
}

GranularitySpec default_granularity(SaliencySource source, GranularityLevel level) {
  if (source == SaliencySource::Mimic) return {level, ThresholdMode::Half, true};
  return {level, ThresholdMode::Positive, false};
}

ExperimentConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  reject_unknown(root, "",
                 {"saliency_source", "granularity", "cyborg", "seeds", "train", "mimic", "dataset",
                  "external_maps_dir", "fpr_grid_size"});

  ExperimentConfig c;
  const auto source = parse_saliency_source(get_string(root, "", "saliency_source", "human"));
  require(source.has_value(), "saliency_source", "expected human, mimic, segmenter_external or none");
  c.saliency_source = *source;

  if (root.contains("granularity") && !root.at("granularity").is_null()) {
    const auto& g = root.at("granularity");
    reject_unknown(g, "granularity", {"level", "threshold_mode", "erode_before_boi"});
    const auto level = parse_granularity_level(get_string(g, "granularity", "level", "AOI"));
    require(level.has_value(), "granularity.level", "expected BOI, AOI or FOI");
    GranularitySpec spec = default_granularity(c.saliency_source, *level);
    if (g.contains("threshold_mode")) {
      const auto mode = parse_threshold_mode(get_string(g, "granularity", "threshold_mode", ""));
      require(mode.has_value(), "granularity.threshold_mode", "expected positive or half");
      spec.threshold_mode = *mode;
    }
    if (g.contains("erode_before_boi")) {
      require(g.at("erode_before_boi").is_boolean(), "granularity.erode_before_boi", "expected a boolean");
      spec.erode_before_boi = g.at("erode_before_boi").get<bool>();
    }
    c.granularity = spec;
  }
  if (c.saliency_source == SaliencySource::None) {
    c.granularity.reset();
  } else if (!c.granularity) {
    c.granularity = default_granularity(c.saliency_source);
  }

  if (root.contains("cyborg")) {
    const auto& cy = root.at("cyborg");
    reject_unknown(cy, "cyborg", {"alpha"});
    c.cyborg.alpha = get_number(cy, "cyborg", "alpha", c.cyborg.alpha);
  }
  require(c.cyborg.alpha >= 0.0 && c.cyborg.alpha <= 1.0, "cyborg.alpha", "must lie in [0,1]");

  if (root.contains("seeds")) {
    const auto& s = root.at("seeds");
    require(s.is_array() && !s.empty(), "seeds", "expected a non-empty array of integers");
    c.seeds.clear();
    for (const auto& v : s) {
      require(v.is_number_unsigned(), "seeds", "expected non-negative integers");
      c.seeds.push_back(v.get<std::uint64_t>());
    }
    std::set<std::uint64_t> unique(c.seeds.begin(), c.seeds.end());
    require(unique.size() == c.seeds.size(), "seeds", "seeds must be distinct");
  }

  if (root.contains("train")) {
    const auto& t = root.at("train");
    reject_unknown(t, "train", {"optimizer", "learning_rate", "decay_factor", "step_epochs", "epochs", "batch_size",
                                "batch_reduction"});
    const std::string opt = get_string(t, "train", "optimizer", "sgd");
    require(opt == "sgd" || opt == "adam", "train.optimizer", "expected sgd or adam");
    c.train.optimizer = opt == "sgd" ? OptimizerKind::SGD : OptimizerKind::Adam;
    c.train.learning_rate = get_number(t, "train", "learning_rate", c.train.learning_rate);
    c.train.decay_factor = get_number(t, "train", "decay_factor", c.train.decay_factor);
    c.train.step_epochs = get_count(t, "train", "step_epochs", c.train.step_epochs);
    c.train.epochs = get_count(t, "train", "epochs", c.train.epochs);
    c.train.batch_size = get_count(t, "train", "batch_size", c.train.batch_size);
    const std::string reduction = get_string(t, "train", "batch_reduction", "sum");
    require(reduction == "sum" || reduction == "mean", "train.batch_reduction", "expected sum or mean");
    c.train.reduction = reduction == "sum" ? BatchReduction::Sum : BatchReduction::Mean;
  }
  require(c.train.learning_rate > 0.0, "train.learning_rate", "must be positive");
  require(c.train.decay_factor > 0.0 && c.train.decay_factor < 1.0, "train.decay_factor", "must lie in (0,1)");
  require(c.train.step_epochs >= 1, "train.step_epochs", "must be >= 1");
  require(c.train.epochs >= 1, "train.epochs", "must be >= 1");
  require(c.train.batch_size >= 1, "train.batch_size", "must be >= 1");

  if (root.contains("mimic")) {
    const auto& m = root.at("mimic");
    reject_unknown(m, "mimic", {"learning_rate", "epochs", "batch_size"});
    c.mimic.learning_rate = get_number(m, "mimic", "learning_rate", c.mimic.learning_rate);
    c.mimic.epochs = get_count(m, "mimic", "epochs", c.mimic.epochs);
    c.mimic.batch_size = get_count(m, "mimic", "batch_size", c.mimic.batch_size);
  }
  require(c.mimic.learning_rate > 0.0, "mimic.learning_rate", "must be positive");
  require(c.mimic.epochs >= 1, "mimic.epochs", "must be >= 1");
  require(c.mimic.batch_size >= 1, "mimic.batch_size", "must be >= 1");

  if (root.contains("dataset")) {
    const auto& d = root.at("dataset");
    c.dataset = parse_dataset(d, c.dataset);
    if (d.contains("manifest")) c.manifest = resolve(base_dir, get_string(d, "dataset", "manifest", ""));
  }

  if (root.contains("external_maps_dir")) {
    c.external_maps_dir = resolve(base_dir, get_string(root, "", "external_maps_dir", ""));
  }
  if (c.saliency_source == SaliencySource::SegmenterExternal && !c.external_maps_dir) {
    throw Error(ErrorCode::ConfigInvalid, "saliency_source segmenter_external requires external_maps_dir");
  }

  c.fpr_grid_size = get_count(root, "", "fpr_grid_size", c.fpr_grid_size);
  require(c.fpr_grid_size >= 2, "fpr_grid_size", "must be >= 2");
  return c;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigInvalid, "cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path.parent_path());
}

std::string serialize_config(const ExperimentConfig& c) {
  json root;
  root["saliency_source"] = std::string(to_string(c.saliency_source));
  if (c.granularity) {
    root["granularity"] = {{"level", std::string(to_string(c.granularity->level))},
                           {"threshold_mode", std::string(to_string(c.granularity->threshold_mode))},
                           {"erode_before_boi", c.granularity->erode_before_boi}};
  }
  root["cyborg"] = {{"alpha", c.cyborg.alpha}};
  root["seeds"] = c.seeds;
  root["train"] = {{"optimizer", c.train.optimizer == OptimizerKind::SGD ? "sgd" : "adam"},
                   {"learning_rate", c.train.learning_rate},
                   {"decay_factor", c.train.decay_factor},
                   {"step_epochs", c.train.step_epochs},
                   {"epochs", c.train.epochs},
                   {"batch_size", c.train.batch_size},
                   {"batch_reduction", c.train.reduction == BatchReduction::Sum ? "sum" : "mean"}};
  root["mimic"] = {{"learning_rate", c.mimic.learning_rate},
                   {"epochs", c.mimic.epochs},
                   {"batch_size", c.mimic.batch_size}};
  root["dataset"] = dataset_json(c.dataset);
  if (c.manifest) root["dataset"]["manifest"] = c.manifest->string();
  if (c.external_maps_dir) root["external_maps_dir"] = c.external_maps_dir->string();
  root["fpr_grid_size"] = c.fpr_grid_size;
  return root.dump(2) + "\n";
}

}  // namespace salgrain
