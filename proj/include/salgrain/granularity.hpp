#pragma once

#include <cstddef>
#include <optional>
#include <string_view>

#include "salgrain/saliency_map.hpp"

namespace salgrain {

enum class GranularityLevel { BOI, AOI, FOI };

// Positive: v > 0 -> 255. Half: v > 127 -> 255.
enum class ThresholdMode { Positive, Half };

struct GranularitySpec {
  GranularityLevel level = GranularityLevel::AOI;
  ThresholdMode threshold_mode = ThresholdMode::Positive;
  bool erode_before_boi = false;  // only consulted for BOI

  friend bool operator==(const GranularitySpec&, const GranularitySpec&) = default;
};

// Inclusive pixel bounds.
struct Rect {
  std::size_t min_x = 0;
  std::size_t min_y = 0;
  std::size_t max_x = 0;
  std::size_t max_y = 0;

  bool contains(std::size_t x, std::size_t y) const noexcept {
    return x >= min_x && x <= max_x && y >= min_y && y <= max_y;
  }

  friend bool operator==(const Rect&, const Rect&) = default;
};

std::string_view to_string(GranularityLevel level);
std::string_view to_string(ThresholdMode mode);
std::optional<GranularityLevel> parse_granularity_level(std::string_view text);
std::optional<ThresholdMode> parse_threshold_mode(std::string_view text);

SaliencyMap binarize(const SaliencyMap& map, ThresholdMode mode);

// Single-iteration 3x3 erosion with all-ones structuring element. Out-of-image
// neighbours count as background, so the one-pixel border always erodes.
SaliencyMap erode_3x3(const SaliencyMap& map);

// Smallest axis-aligned rectangle covering every pixel > 0.
Rect bounding_rectangle(const SaliencyMap& map);

SaliencyMap rasterize_rect(const Rect& rect, std::size_t width, std::size_t height);

// FOI: copy. AOI: binarize. BOI: binarize, optional erosion, enclosing rectangle.
SaliencyMap derive(const SaliencyMap& foi, const GranularitySpec& spec);

// derive(), except an empty BOI falls back to the full-image rectangle. Sets
// *fell_back when that happens.
SaliencyMap derive_or_full(const SaliencyMap& foi, const GranularitySpec& spec, bool* fell_back = nullptr);

}  // namespace salgrain
