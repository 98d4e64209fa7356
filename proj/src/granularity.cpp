#include "salgrain/granularity.hpp"

#include <algorithm>

#include "salgrain/error.hpp"

namespace salgrain {

std::string_view to_string(GranularityLevel level) {
  switch (level) {
    case GranularityLevel::BOI: return "BOI";
    case GranularityLevel::AOI: return "AOI";
    case GranularityLevel::FOI: return "FOI";
  }
  return "?";
}

std::string_view to_string(ThresholdMode mode) {
  return mode == ThresholdMode::Positive ? "positive" : "half";
}

std::optional<GranularityLevel> parse_granularity_level(std::string_view text) {
  if (text == "BOI" || text == "boi") return GranularityLevel::BOI;
  if (text == "AOI" || text == "aoi") return GranularityLevel::AOI;
  if (text == "FOI" || text == "foi") return GranularityLevel::FOI;
  return std::nullopt;
}

std::optional<ThresholdMode> parse_threshold_mode(std::string_view text) {
  if (text == "positive") return ThresholdMode::Positive;
  if (text == "half") return ThresholdMode::Half;
  return std::nullopt;
}

SaliencyMap binarize(const SaliencyMap& map, ThresholdMode mode) {
  const std::uint8_t cut = mode == ThresholdMode::Positive ? 0 : 127;
  SaliencyMap out(map.width(), map.height());
  auto src = map.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > cut ? 255 : 0;
  return out;
}

SaliencyMap erode_3x3(const SaliencyMap& map) {
  for (auto v : map.values()) {
    if (v != 0 && v != 255) throw Error(ErrorCode::NotBinary, "erosion requires a {0,255} map");
  }
  const std::size_t w = map.width();
  const std::size_t h = map.height();
  SaliencyMap out(w, h);
  if (w < 3 || h < 3) return out;
  for (std::size_t y = 1; y + 1 < h; ++y) {
    for (std::size_t x = 1; x + 1 < w; ++x) {
      bool keep = true;
      for (std::size_t dy = 0; dy < 3 && keep; ++dy) {
        for (std::size_t dx = 0; dx < 3; ++dx) {
          if (map.at(x + dx - 1, y + dy - 1) != 255) {
            keep = false;
            break;
          }
        }
      }
      if (keep) out.at(x, y) = 255;
    }
  }
  return out;
}

Rect bounding_rectangle(const SaliencyMap& map) {
  Rect r{map.width(), map.height(), 0, 0};
  bool any = false;
  for (std::size_t y = 0; y < map.height(); ++y) {
    for (std::size_t x = 0; x < map.width(); ++x) {
      if (map.at(x, y) == 0) continue;
      any = true;
      r.min_x = std::min(r.min_x, x);
      r.min_y = std::min(r.min_y, y);
      r.max_x = std::max(r.max_x, x);
      r.max_y = std::max(r.max_y, y);
    }
  }
  if (!any) throw Error(ErrorCode::EmptySaliency, "no salient pixel to enclose");
  return r;
}

SaliencyMap rasterize_rect(const Rect& rect, std::size_t width, std::size_t height) {
  if (rect.min_x > rect.max_x || rect.min_y > rect.max_y || rect.max_x >= width || rect.max_y >= height) {
    throw Error(ErrorCode::OutOfBounds, "rectangle does not fit the target map");
  }
  SaliencyMap out(width, height);
  for (std::size_t y = rect.min_y; y <= rect.max_y; ++y) {
    for (std::size_t x = rect.min_x; x <= rect.max_x; ++x) out.at(x, y) = 255;
  }
  return out;
}

SaliencyMap derive(const SaliencyMap& foi, const GranularitySpec& spec) {
  switch (spec.level) {
    case GranularityLevel::FOI:
      return foi;
    case GranularityLevel::AOI:
      return binarize(foi, spec.threshold_mode);
    case GranularityLevel::BOI: {
      SaliencyMap support = binarize(foi, spec.threshold_mode);
      if (spec.erode_before_boi) support = erode_3x3(support);
      return rasterize_rect(bounding_rectangle(support), foi.width(), foi.height());
    }
  }
  return foi;
}

SaliencyMap derive_or_full(const SaliencyMap& foi, const GranularitySpec& spec, bool* fell_back) {
  if (fell_back) *fell_back = false;
  try {
    return derive(foi, spec);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::EmptySaliency) throw;
    if (fell_back) *fell_back = true;
    return SaliencyMap(foi.width(), foi.height(), 255);
  }
}

}  // namespace salgrain
