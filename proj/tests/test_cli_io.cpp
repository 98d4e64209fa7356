#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "salgrain/checkpoint.hpp"
#include "salgrain/config.hpp"
#include "salgrain/error.hpp"
#include "salgrain/experiment.hpp"
#include "salgrain/manifest.hpp"
#include "salgrain/pgm.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace salgrain;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::IoError;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("salgrain_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

constexpr const char* kTinyDataset =
    R"("dataset": {"n_train": 8, "n_val": 4, "n_test": 8})";

std::string tiny_config(const std::string& source, const std::string& extra = "") {
  return std::string("{\"saliency_source\": \"") + source + "\", \"seeds\": [2, 1, 3], " +
         R"("train": {"epochs": 2, "batch_size": 4}, "mimic": {"epochs": 2, "batch_size": 4}, )" + kTinyDataset +
         extra + "}";
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(SALGRAIN_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(PgmTest, ByteFixture) {
  const SaliencyMap m(3, 2, std::vector<std::uint8_t>{0, 1, 2, 253, 254, 255});
  const std::string bytes = encode_pgm(m);
  EXPECT_EQ(bytes, std::string("P5\n3 2\n255\n") + std::string("\x00\x01\x02\xfd\xfe\xff", 6));
  EXPECT_EQ(decode_pgm(bytes), m);
}

TEST(PgmTest, RoundTripThroughFile) {
  std::mt19937_64 rng(1);
  const fs::path dir = scratch_dir("pgm");
  for (int i = 0; i < 5; ++i) {
    const SaliencyMap m = testing_support::random_map(rng, 5 + i, 9 - i);
    write_pgm(m, dir / "m.pgm");
    EXPECT_EQ(read_pgm(dir / "m.pgm"), m);
  }
}

TEST(PgmTest, CommentsAccepted) {
  EXPECT_EQ(decode_pgm(std::string("P5\n# made by hand\n2 1\n255\n\x07\x08", 28)),
            SaliencyMap(2, 1, std::vector<std::uint8_t>{7, 8}));
}

TEST(PgmTest, Errors) {
  EXPECT_EQ(code_of([] { decode_pgm("P5\n2 1\n65535\n\0\0\0\0"); }), ErrorCode::UnsupportedMaxval);
  EXPECT_EQ(code_of([] { decode_pgm(std::string("P5\n3 2\n255\n\x01\x02", 13)); }), ErrorCode::TruncatedPayload);
  EXPECT_EQ(code_of([] { decode_pgm("P2\n1 1\n255\n0"); }), ErrorCode::MalformedHeader);
  EXPECT_EQ(code_of([] { decode_pgm("P5\nx 1\n255\n0"); }), ErrorCode::MalformedHeader);
}

TEST(PgmTest, ImageConversion) {
  const Tensor img({1, 1, 3}, std::vector<double>{0.0, 0.5, 1.0});
  const SaliencyMap g = image_to_gray(img);
  EXPECT_EQ(g, SaliencyMap(3, 1, std::vector<std::uint8_t>{0, 128, 255}));
  EXPECT_EQ(gray_to_image(g)[2], 1.0);
}

TEST(ManifestTest, RoundTrip) {
  const fs::path dir = scratch_dir("manifest");
  write_pgm(SaliencyMap(2, 2, 9), dir / "a.pgm");
  write_pgm(SaliencyMap(2, 2, 200), dir / "s.pgm");
  Manifest m;
  m.base_dir = dir;
  m.rows.push_back({"train", "a.pgm", 1, "s.pgm", {"s.pgm", "a.pgm"}, {true, false}});
  m.rows.push_back({"test", "a.pgm", 0, "", {}, {}});
  write_manifest(m, dir / "manifest.csv");
  const Manifest back = read_manifest(dir / "manifest.csv");
  EXPECT_EQ(back.rows, m.rows);
  EXPECT_EQ(slurp(dir / "manifest.csv").substr(0, std::string(kManifestHeader).size()), kManifestHeader);
}

TEST(ManifestTest, Errors) {
  const fs::path dir = scratch_dir("manifest_errors");
  write_pgm(SaliencyMap(2, 2), dir / "a.pgm");
  const std::string header = std::string(kManifestHeader) + "\n";
  EXPECT_THROW(parse_manifest("split,image\n", dir), Error);
  EXPECT_THROW(parse_manifest(header + "train,a.pgm,2,,,\n", dir), Error);
  EXPECT_THROW(parse_manifest(header + "train,a.pgm,1,,x.pgm;y.pgm,1\n", dir), Error);
  spit(dir / "m.csv", header + "train,missing.pgm,1,,,\n");
  EXPECT_THROW(read_manifest(dir / "m.csv"), Error);
}

TEST(ConfigTest, EmptyObjectGivesDefaults) {
  const ExperimentConfig c = parse_config_text("{}");
  EXPECT_EQ(c.cyborg.alpha, 0.5);
  EXPECT_EQ(c.train.learning_rate, 0.005);
  EXPECT_EQ(c.train.epochs, 50u);
  EXPECT_EQ(c.train.batch_size, 20u);
  EXPECT_EQ(c.train.decay_factor, 0.1);
  EXPECT_EQ(c.train.step_epochs, 12u);
  EXPECT_EQ(c.train.optimizer, OptimizerKind::SGD);
  EXPECT_EQ(c.train.reduction, BatchReduction::Sum);
  EXPECT_EQ(c.mimic.learning_rate, 0.0001);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{1, 2, 3}));
  EXPECT_EQ(c.dataset, SynthConfig{});
  ASSERT_TRUE(c.granularity);
  EXPECT_EQ(c.granularity->level, GranularityLevel::AOI);
}

TEST(ConfigTest, RangeAndKeyErrors) {
  EXPECT_EQ(code_of([] { parse_config_text(R"({"cyborg": {"alpha": 1.5}})"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { parse_config_text(R"({"colour": 1})"); }), ErrorCode::UnknownKey);
  EXPECT_EQ(code_of([] { parse_config_text(R"({"train": {"epochz": 1}})"); }), ErrorCode::UnknownKey);
  EXPECT_EQ(code_of([] { parse_config_text(R"({"train": {"batch_reduction": "max"}})"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { parse_config_text("{\n  \"seeds\": [1,\n}"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { parse_config_text(R"({"saliency_source": "segmenter_external"})"); }),
            ErrorCode::ConfigInvalid);
  try {
    parse_config_text("{\n  \"seeds\": [1,\n}");
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line"), std::string::npos);
  }
}

TEST(ConfigTest, SourceDefaults) {
  EXPECT_FALSE(parse_config_text(R"({"saliency_source": "none", "granularity": {"level": "BOI"}})").granularity);
  const auto mimic = parse_config_text(R"({"saliency_source": "mimic", "granularity": {"level": "BOI"}})");
  EXPECT_EQ(mimic.granularity->threshold_mode, ThresholdMode::Half);
  EXPECT_TRUE(mimic.granularity->erode_before_boi);
  const auto human = parse_config_text(R"({"granularity": {"level": "BOI"}})");
  EXPECT_EQ(human.granularity->threshold_mode, ThresholdMode::Positive);
  EXPECT_FALSE(human.granularity->erode_before_boi);
}

TEST(ConfigTest, FullFixtureRoundTrips) {
  const std::string text = R"({
    "saliency_source": "segmenter_external",
    "granularity": {"level": "BOI", "threshold_mode": "half", "erode_before_boi": true},
    "cyborg": {"alpha": 0.25},
    "seeds": [4, 5, 6, 7, 8],
    "train": {"optimizer": "adam", "learning_rate": 0.001, "decay_factor": 0.5, "step_epochs": 3, "epochs": 9, "batch_size": 5,
              "batch_reduction": "mean"},
    "mimic": {"learning_rate": 0.002, "epochs": 7, "batch_size": 3},
    "dataset": {"image_size": 24, "n_train": 40, "n_val": 12, "n_test": 30, "n_annotators": 4,
                "annotator_jitter": 1, "annotator_error_rate": 0.2, "shift_mode": "artifact_moved", "seed": 9,
                "texture_sigma": 2.5, "texture_contrast": 0.1, "noise_std": 0.02, "artifact_radius": 2,
                "artifact_amplitude": 0.3, "weakened_factor": 0.4, "held_out_fraction": 0.25},
    "external_maps_dir": "/tmp/maps",
    "fpr_grid_size": 51
  })";
  const ExperimentConfig c = parse_config_text(text);
  EXPECT_EQ(c.cyborg.alpha, 0.25);
  EXPECT_EQ(c.dataset.shift_mode, ShiftMode::ArtifactMoved);
  EXPECT_EQ(c.train.optimizer, OptimizerKind::Adam);
  EXPECT_EQ(c.train.reduction, BatchReduction::Mean);
  const std::string once = serialize_config(c);
  const ExperimentConfig back = parse_config_text(once);
  EXPECT_TRUE(back == c);
  EXPECT_EQ(serialize_config(back), once);
}

TEST(ExperimentTest, WritesReportFilesAndIsDeterministic) {
  const fs::path dir = scratch_dir("experiment");
  const ExperimentConfig c = parse_config_text(tiny_config("human"));
  const ExperimentResult a = run_experiment(c, dir / "a", {true, 1});
  const ExperimentResult b = run_experiment(c, dir / "b", {true, 2});
  ASSERT_EQ(a.runs.size(), 3u);
  EXPECT_EQ(a.runs[0].seed, 1u);
  EXPECT_EQ(a.runs[2].seed, 3u);
  for (const char* f : {"report.csv", "summary.csv", "roc.csv", "validation.csv", "scores_seed2.csv",
                        "model_seed1.ckpt", "model_seed3.ckpt"}) {
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
  const std::string report = slurp(dir / "a" / "report.csv");
  EXPECT_EQ(report.substr(0, report.find('\n')), "source,granularity,seed,auc");
  EXPECT_EQ(std::count(report.begin(), report.end(), '\n'), 4);
  EXPECT_NE(report.find("\nhuman,AOI,1,"), std::string::npos);
}

TEST(ExperimentTest, AlphaZeroMatchesNoneSource) {
  const fs::path dir = scratch_dir("alpha_zero");
  const auto none = parse_config_text(tiny_config("none"));
  const auto zero = parse_config_text(tiny_config("human", R"(, "cyborg": {"alpha": 0})"));
  const RunResult a = run_seed(none, 1, {true});
  const RunResult b = run_seed(zero, 1, {true});
  for (std::size_t i = 0; i < parameters(a.model).size(); ++i) EXPECT_EQ(*parameters(a.model)[i], *parameters(b.model)[i]);
}

TEST(ExperimentTest, ExternalMapsUseTheSamePath) {
  // Ground-truth FOI maps written by gen-data double as an external source.
  const fs::path dir = scratch_dir("external");
  SynthConfig synth;
  synth.n_train = 8;
  synth.n_val = 4;
  synth.n_test = 8;
  const fs::path manifest = write_synthetic_dataset(synth, dir / "data");
  const auto cfg = parse_config_text(std::string(R"({"saliency_source": "segmenter_external", "seeds": [1],
      "train": {"epochs": 2, "batch_size": 4}, "external_maps_dir": ")") + (dir / "data" / "foi").string() +
      R"(", "dataset": {"manifest": ")" + manifest.string() + "\"}}");
  const ExperimentResult r = run_experiment(cfg, dir / "out", {true, 1});
  EXPECT_EQ(r.runs.size(), 1u);
  const Dataset d = load_manifest_dataset(manifest);
  EXPECT_EQ(d.train.size(), 8u);
  EXPECT_EQ(d.train_b.size(), 8u);
  EXPECT_EQ(d.test.size(), 8u);
}

TEST(ExperimentTest, MimicSourceUsesSecondSplit) {
  const auto cfg = parse_config_text(tiny_config("mimic"));
  Dataset data = prepare_dataset(cfg, 1);
  ASSERT_EQ(data.train_b.size(), data.train.size());
  EXPECT_EQ(data.train_b[0].id, "trainb_0000");
  EXPECT_NE(data.train_b[0].image, data.train[0].image);
  const SaliencyAssignment a = assign_saliency(cfg, data, 1, {true});
  ASSERT_TRUE(a.mimic);
  ASSERT_EQ(a.train.size(), data.train_b.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) EXPECT_EQ(a.foi[i].has_value(), a.train[i].label == Label::Attack);
}

TEST(ExperimentTest, WorkerCountHonoursCap) {
  EXPECT_EQ(worker_count(5, 2), 2u);
  EXPECT_EQ(worker_count(1, 8), 1u);
  setenv("FORGE_THREADS", "3", 1);
  EXPECT_EQ(worker_count(5, 0), 3u);
  unsetenv("FORGE_THREADS");
}

TEST(ExperimentTest, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 0.9100000000000001, 5e-05}) EXPECT_EQ(std::stod(format_double(v)), v);
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(CliTest, EverySubcommand) {
  const fs::path dir = scratch_dir("cli");
  const fs::path log = dir / "log.txt";
  spit(dir / "human.json", tiny_config("human"));
  spit(dir / "mimic.json", tiny_config("mimic", R"(, "granularity": {"level": "BOI"})"));

  ASSERT_EQ(run_cli("--config " + (dir / "human.json").string() + " --out " + (dir / "data").string() +
                        " --quiet gen-data",
                    log),
            0)
      << slurp(log);
  EXPECT_TRUE(fs::exists(dir / "data" / "manifest.csv"));
  const fs::path ann0 = dir / "data" / "annotations" / "train_0001_a0.pgm";
  const fs::path ann1 = dir / "data" / "annotations" / "train_0001_a1.pgm";
  ASSERT_TRUE(fs::exists(ann0));

  ASSERT_EQ(run_cli("aggregate " + ann0.string() + " " + ann1.string() + " --flags 1,1 --out " +
                        (dir / "foi.pgm").string(),
                    log),
            0)
      << slurp(log);
  ASSERT_EQ(run_cli("transform " + (dir / "foi.pgm").string() + " --level BOI --out " + (dir / "boi.pgm").string(), log),
            0)
      << slurp(log);
  EXPECT_EQ(read_pgm(dir / "boi.pgm").width(), 32u);

  ASSERT_EQ(run_cli("--config " + (dir / "human.json").string() + " --seed 4 --out " + (dir / "train").string() +
                        " --quiet train",
                    log),
            0)
      << slurp(log);
  EXPECT_NE(slurp(log).find("seed=4 val_auc="), std::string::npos);
  ASSERT_TRUE(fs::exists(dir / "train" / "model_seed4.ckpt"));

  ASSERT_EQ(run_cli("--config " + (dir / "human.json").string() + " --seed 4 --out " + (dir / "eval").string() +
                        " evaluate --model " + (dir / "train" / "model_seed4.ckpt").string(),
                    log),
            0)
      << slurp(log);
  EXPECT_NE(slurp(log).find("auc="), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "eval" / "scores_test.csv"));

  ASSERT_EQ(run_cli("--config " + (dir / "mimic.json").string() + " --out " + (dir / "mimic").string() +
                        " --quiet train-mimic",
                    log),
            0)
      << slurp(log);
  EXPECT_NE(slurp(log).find("heldout_mse_final="), std::string::npos);
  ASSERT_EQ(run_cli("--out " + (dir / "gen").string() + " mimic-generate --model " +
                        (dir / "mimic" / "mimic_seed2.ckpt").string() + " " +
                        (dir / "data" / "images" / "test_0001.pgm").string(),
                    log),
            0)
      << slurp(log);
  EXPECT_EQ(read_pgm(dir / "gen" / "test_0001.pgm").width(), 32u);

  ASSERT_EQ(run_cli("--config " + (dir / "mimic.json").string() + " --out " + (dir / "exp").string() +
                        " --quiet experiment",
                    log),
            0)
      << slurp(log);
  const std::string report = slurp(dir / "exp" / "report.csv");
  EXPECT_NE(report.find("\nmimic,BOI,2,"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "exp" / "mimic_seed3.ckpt"));
}

TEST(CliTest, ErrorsCarryCodes) {
  const fs::path dir = scratch_dir("cli_errors");
  const fs::path log = dir / "log.txt";
  spit(dir / "bad.json", R"({"cyborg": {"alpha": 2}})");
  EXPECT_EQ(run_cli("--config " + (dir / "bad.json").string() + " experiment", log), 2);
  EXPECT_NE(slurp(log).find("error: code=ParseError message="), std::string::npos);
  spit(dir / "unknown.json", R"({"mystery": true})");
  EXPECT_EQ(run_cli("--config " + (dir / "unknown.json").string() + " experiment", log), 2);
  EXPECT_NE(slurp(log).find("code=UnknownKey"), std::string::npos);
  spit(dir / "truncated.pgm", std::string("P5\n4 4\n255\n\x01", 12));
  EXPECT_EQ(run_cli("transform " + (dir / "truncated.pgm").string() + " --out " + (dir / "x.pgm").string(), log), 3);
  EXPECT_NE(slurp(log).find("code=TruncatedPayload"), std::string::npos);
  EXPECT_EQ(run_cli("no-such-command", log), 2);
}
