#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace salgrain {

// 8-bit single-channel salience grid, row-major.
class SaliencyMap {
 public:
  SaliencyMap() = default;
  SaliencyMap(std::size_t width, std::size_t height, std::uint8_t fill = 0);
  SaliencyMap(std::size_t width, std::size_t height, std::vector<std::uint8_t> values);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }

  std::uint8_t at(std::size_t x, std::size_t y) const { return values_[y * width_ + x]; }
  std::uint8_t& at(std::size_t x, std::size_t y) { return values_[y * width_ + x]; }

  std::span<const std::uint8_t> values() const noexcept { return values_; }
  std::span<std::uint8_t> values() noexcept { return values_; }

  bool empty() const noexcept { return values_.empty(); }

  friend bool operator==(const SaliencyMap&, const SaliencyMap&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> values_;
};

// Floating-point view with values in [0,1].
class UnitMap {
 public:
  UnitMap() = default;
  UnitMap(std::size_t width, std::size_t height, double fill = 0.0);
  UnitMap(std::size_t width, std::size_t height, std::vector<double> values);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }

  double at(std::size_t x, std::size_t y) const { return values_[y * width_ + x]; }

  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const UnitMap&, const UnitMap&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> values_;
};

struct AnnotationSet {
  std::string sample_id;
  std::vector<SaliencyMap> annotator_maps;
  std::vector<bool> annotator_correct;
};

// Rounded (half away from zero) pixelwise mean over the maps flagged correct.
SaliencyMap aggregate_annotations(const AnnotationSet& set);

UnitMap to_unit(const SaliencyMap& map);

// Inverse of to_unit: scales by 255 and rounds half away from zero.
SaliencyMap to_saliency(const UnitMap& map);

// (v - min) / (max - min); a constant map becomes all zeros.
UnitMap minmax_normalize(const UnitMap& map);

// Same rule on raw reals (values need not lie in [0,1]).
std::vector<double> minmax_normalize(std::span<const double> values);

// Half-pixel-centred bilinear resampling with edge clamping.
UnitMap resize_bilinear(const UnitMap& map, std::size_t new_width, std::size_t new_height);

}  // namespace salgrain
