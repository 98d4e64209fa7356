#include "salgrain/synth_data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <cstdio>
#include <random>

#include "salgrain/error.hpp"

namespace salgrain {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Small deterministic generator; std distributions are implementation-defined,
// so uniform and normal draws are derived here directly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::size_t index(std::size_t lo, std::size_t hi) {  // inclusive
    return lo + static_cast<std::size_t>(uniform() * static_cast<double>(hi - lo + 1));
  }

  double normal() {
    // Box-Muller; u1 is kept away from zero.
    const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

enum class Split { Train = 0, Val = 1, Test = 2 };

std::vector<double> gaussian_kernel(double sigma) {
  const auto half = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * half + 1));
  double total = 0.0;
  for (int i = -half; i <= half; ++i) {
    const double v = std::exp(-0.5 * i * i / (sigma * sigma));
    k[static_cast<std::size_t>(i + half)] = v;
    total += v;
  }
  for (auto& v : k) v /= total;
  return k;
}

// Separable blur with clamped borders.
std::vector<double> blur(const std::vector<double>& src, std::size_t n, double sigma) {
  const auto k = gaussian_kernel(sigma);
  const int half = static_cast<int>(k.size() / 2);
  const int last = static_cast<int>(n) - 1;
  std::vector<double> tmp(n * n, 0.0);
  std::vector<double> out(n * n, 0.0);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      double acc = 0.0;
      for (int i = -half; i <= half; ++i) {
        const int xx = std::clamp(static_cast<int>(x) + i, 0, last);
        acc += k[static_cast<std::size_t>(i + half)] * src[y * n + static_cast<std::size_t>(xx)];
      }
      tmp[y * n + x] = acc;
    }
  }
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      double acc = 0.0;
      for (int i = -half; i <= half; ++i) {
        const int yy = std::clamp(static_cast<int>(y) + i, 0, last);
        acc += k[static_cast<std::size_t>(i + half)] * tmp[static_cast<std::size_t>(yy) * n + x];
      }
      out[y * n + x] = acc;
    }
  }
  return out;
}

std::vector<double> bonafide_texture(const SynthConfig& cfg, Rng& rng) {
  const std::size_t n = cfg.image_size;
  std::vector<double> noise(n * n);
  for (auto& v : noise) v = rng.normal();
  std::vector<double> tex = blur(noise, n, cfg.texture_sigma);
  double mean = 0.0;
  for (double v : tex) mean += v;
  mean /= static_cast<double>(tex.size());
  double var = 0.0;
  for (double v : tex) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(tex.size()));
  for (auto& v : tex) v = 0.5 + cfg.texture_contrast * (sd > 0.0 ? (v - mean) / sd : 0.0);
  return tex;
}

// Concentric alternating-sign ring pattern out to radius + 0.5.
void add_ring(std::vector<double>& img, std::size_t n, std::size_t cx, std::size_t cy, std::size_t radius,
              double amplitude) {
  const double reach = static_cast<double>(radius) + 0.5;
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      const double dx = static_cast<double>(x) - static_cast<double>(cx);
      const double dy = static_cast<double>(y) - static_cast<double>(cy);
      const double d = std::sqrt(dx * dx + dy * dy);
      if (d <= reach) img[y * n + x] += amplitude * std::cos(std::numbers::pi * d);
    }
  }
}

SynthSample make_sample(const SynthConfig& cfg, Split split, std::size_t index, Label label) {
  static constexpr const char* kSplitNames[] = {"train", "val", "test"};
  Rng rng(splitmix64(cfg.seed ^ splitmix64((static_cast<std::uint64_t>(split) << 32) | index)));
  const std::size_t n = cfg.image_size;

  SynthSample s;
  char id[32];
  std::snprintf(id, sizeof(id), "%s_%04zu", kSplitNames[static_cast<int>(split)], index);
  s.id = id;
  s.label = label;

  std::vector<double> img = bonafide_texture(cfg, rng);
  if (label == Label::Attack) {
    const std::size_t r = cfg.artifact_radius;
    std::size_t x_lo = r;
    std::size_t x_hi = n - 1 - r;
    if (cfg.shift_mode == ShiftMode::ArtifactMoved) {
      const auto band = static_cast<std::size_t>(std::floor(static_cast<double>(n) * (1.0 - cfg.held_out_fraction)));
      const std::size_t boundary = std::clamp(band, x_lo + 1, x_hi);
      if (split == Split::Test) x_lo = boundary; else x_hi = boundary - 1;
    }
    s.artifact_x = rng.index(x_lo, x_hi);
    s.artifact_y = rng.index(r, n - 1 - r);
    double amplitude = cfg.artifact_amplitude;
    if (split == Split::Test && cfg.shift_mode == ShiftMode::ArtifactWeakened) amplitude *= cfg.weakened_factor;
    add_ring(img, n, s.artifact_x, s.artifact_y, r, amplitude);

    const double sigma = static_cast<double>(r);
    s.true_foi = gaussian_bump(n, n, static_cast<double>(s.artifact_x), static_cast<double>(s.artifact_y), sigma);

    AnnotationSet ann;
    ann.sample_id = s.id;
    const auto jitter = static_cast<double>(cfg.annotator_jitter);
    for (std::size_t a = 0; a < cfg.n_annotators; ++a) {
      const double jx = static_cast<double>(rng.index(0, 2 * cfg.annotator_jitter)) - jitter;
      const double jy = static_cast<double>(rng.index(0, 2 * cfg.annotator_jitter)) - jitter;
      ann.annotator_maps.push_back(gaussian_bump(n, n, static_cast<double>(s.artifact_x) + jx,
                                                 static_cast<double>(s.artifact_y) + jy, sigma));
      ann.annotator_correct.push_back(rng.uniform() >= cfg.annotator_error_rate);
    }
    s.annotations = std::move(ann);
  }

  for (auto& v : img) v = std::clamp(v + cfg.noise_std * rng.normal(), 0.0, 1.0);
  s.image = Tensor({1, n, n}, std::move(img));
  return s;
}

std::vector<SynthSample> make_split(const SynthConfig& cfg, Split split, std::size_t count) {
  std::vector<SynthSample> out;
  out.reserve(count);
  // Alternate labels so the split is balanced to within one sample.
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(make_sample(cfg, split, i, i % 2 == 0 ? Label::Bonafide : Label::Attack));
  }
  return out;
}

}  // namespace

std::string_view to_string(ShiftMode mode) {
  return mode == ShiftMode::ArtifactMoved ? "artifact_moved" : "artifact_weakened";
}

std::optional<ShiftMode> parse_shift_mode(std::string_view text) {
  if (text == "artifact_moved") return ShiftMode::ArtifactMoved;
  if (text == "artifact_weakened") return ShiftMode::ArtifactWeakened;
  return std::nullopt;
}

void validate(const SynthConfig& c) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::ConfigInvalid, msg); };
  if (c.n_train < 4 || c.n_val < 4 || c.n_test < 4) fail("each split needs at least 2 samples per class");
  if (c.image_size < 2 * c.artifact_radius + 2) fail("image_size too small for the artifact radius");
  if (c.artifact_radius == 0) fail("artifact_radius must be >= 1");
  if (c.n_annotators == 0) fail("n_annotators must be >= 1");
  if (!(c.annotator_error_rate >= 0.0 && c.annotator_error_rate <= 1.0)) fail("annotator_error_rate must lie in [0,1]");
  if (!(c.weakened_factor >= 0.0 && c.weakened_factor <= 1.0)) fail("weakened_factor must lie in [0,1]");
  if (!(c.held_out_fraction > 0.0 && c.held_out_fraction < 1.0)) fail("held_out_fraction must lie in (0,1)");
  if (!(c.texture_sigma > 0.0) || !(c.texture_contrast >= 0.0) || !(c.noise_std >= 0.0)) {
    fail("texture and noise parameters must be non-negative");
  }
}

SaliencyMap gaussian_bump(std::size_t width, std::size_t height, double cx, double cy, double sigma) {
  SaliencyMap out(width, height);
  const double denom = 2.0 * sigma * sigma;
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double dx = static_cast<double>(x) - cx;
      const double dy = static_cast<double>(y) - cy;
      out.at(x, y) = static_cast<std::uint8_t>(std::lround(255.0 * std::exp(-(dx * dx + dy * dy) / denom)));
    }
  }
  return out;
}

SynthSplits generate(const SynthConfig& config) {
  validate(config);
  return {make_split(config, Split::Train, config.n_train), make_split(config, Split::Val, config.n_val),
          make_split(config, Split::Test, config.n_test)};
}

}  // namespace salgrain
