#include "salgrain/saliency_map.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "salgrain/error.hpp"

namespace salgrain {

namespace {

void check_dims(std::size_t width, std::size_t height, std::size_t length) {
  if (width == 0 || height == 0) {
    throw Error(ErrorCode::DimensionMismatch, "map dimensions must be at least 1x1");
  }
  if (width * height != length) {
    throw Error(ErrorCode::DimensionMismatch,
                "map payload length " + std::to_string(length) + " != " + std::to_string(width) + "x" +
                    std::to_string(height));
  }
}

}  // namespace

SaliencyMap::SaliencyMap(std::size_t width, std::size_t height, std::uint8_t fill)
    : SaliencyMap(width, height, std::vector<std::uint8_t>(width * height, fill)) {}

SaliencyMap::SaliencyMap(std::size_t width, std::size_t height, std::vector<std::uint8_t> values)
    : width_(width), height_(height), values_(std::move(values)) {
  check_dims(width_, height_, values_.size());
}

UnitMap::UnitMap(std::size_t width, std::size_t height, double fill)
    : UnitMap(width, height, std::vector<double>(width * height, fill)) {}

UnitMap::UnitMap(std::size_t width, std::size_t height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
  check_dims(width_, height_, values_.size());
  for (double v : values_) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::OutOfBounds, "unit map value outside [0,1]");
    }
  }
}

SaliencyMap aggregate_annotations(const AnnotationSet& set) {
  if (set.annotator_maps.size() != set.annotator_correct.size()) {
    throw Error(ErrorCode::DimensionMismatch, "annotation set '" + set.sample_id +
                                                  "': correctness flags do not match map count");
  }
  if (set.annotator_maps.empty()) {
    throw Error(ErrorCode::NoCorrectAnnotations, "annotation set '" + set.sample_id + "' is empty");
  }
  const auto& first = set.annotator_maps.front();
  for (const auto& m : set.annotator_maps) {
    if (m.width() != first.width() || m.height() != first.height()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "annotation set '" + set.sample_id + "': annotator maps differ in size");
    }
  }

  std::vector<std::uint32_t> sum(first.size(), 0);
  std::uint32_t count = 0;
  for (std::size_t i = 0; i < set.annotator_maps.size(); ++i) {
    if (!set.annotator_correct[i]) continue;
    ++count;
    auto src = set.annotator_maps[i].values();
    for (std::size_t p = 0; p < sum.size(); ++p) sum[p] += src[p];
  }
  if (count == 0) {
    throw Error(ErrorCode::NoCorrectAnnotations,
                "annotation set '" + set.sample_id + "' has no correct annotations");
  }

  // Integer half-up rounding; all terms are non-negative so this is half away from zero.
  std::vector<std::uint8_t> out(sum.size());
  for (std::size_t p = 0; p < sum.size(); ++p) {
    out[p] = static_cast<std::uint8_t>((2 * sum[p] + count) / (2 * count));
  }
  return SaliencyMap(first.width(), first.height(), std::move(out));
}

UnitMap to_unit(const SaliencyMap& map) {
  std::vector<double> values(map.size());
  auto src = map.values();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = src[i] / 255.0;
  return UnitMap(map.width(), map.height(), std::move(values));
}

SaliencyMap to_saliency(const UnitMap& map) {
  std::vector<std::uint8_t> values(map.size());
  auto src = map.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = static_cast<std::uint8_t>(std::clamp(std::lround(src[i] * 255.0), 0L, 255L));
  }
  return SaliencyMap(map.width(), map.height(), std::move(values));
}

std::vector<double> minmax_normalize(std::span<const double> values) {
  std::vector<double> out(values.size(), 0.0);
  if (values.empty()) return out;
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double min = *lo;
  const double range = *hi - min;
  if (!(range > 0.0)) return out;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - min) / range;
  return out;
}

UnitMap minmax_normalize(const UnitMap& map) {
  return UnitMap(map.width(), map.height(), minmax_normalize(map.values()));
}

UnitMap resize_bilinear(const UnitMap& map, std::size_t new_width, std::size_t new_height) {
  if (new_width == 0 || new_height == 0) {
    throw Error(ErrorCode::DimensionMismatch, "resize target must be at least 1x1");
  }
  if (new_width == map.width() && new_height == map.height()) return map;

  const double sx = static_cast<double>(map.width()) / static_cast<double>(new_width);
  const double sy = static_cast<double>(map.height()) / static_cast<double>(new_height);
  const double max_x = static_cast<double>(map.width() - 1);
  const double max_y = static_cast<double>(map.height() - 1);

  std::vector<double> out(new_width * new_height);
  for (std::size_t y = 0; y < new_height; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, max_y);
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, map.height() - 1);
    const double ty = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < new_width; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, max_x);
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, map.width() - 1);
      const double tx = fx - static_cast<double>(x0);
      const double top = map.at(x0, y0) * (1.0 - tx) + map.at(x1, y0) * tx;
      const double bottom = map.at(x0, y1) * (1.0 - tx) + map.at(x1, y1) * tx;
      out[y * new_width + x] = std::clamp(top * (1.0 - ty) + bottom * ty, 0.0, 1.0);
    }
  }
  return UnitMap(new_width, new_height, std::move(out));
}

}  // namespace salgrain
