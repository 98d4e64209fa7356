#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "salgrain/saliency_map.hpp"
#include "salgrain/tensor.hpp"

namespace testing_support {

inline salgrain::SaliencyMap random_map(std::mt19937_64& rng, std::size_t w, std::size_t h) {
  std::uniform_int_distribution<int> dist(0, 255);
  std::vector<std::uint8_t> v(w * h);
  for (auto& x : v) x = static_cast<std::uint8_t>(dist(rng));
  return {w, h, std::move(v)};
}

// Each pixel nonzero with the given probability, value drawn from 1..255.
inline salgrain::SaliencyMap sparse_map(std::mt19937_64& rng, std::size_t w, std::size_t h, double density) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> dist(1, 255);
  std::vector<std::uint8_t> v(w * h, 0);
  for (auto& x : v) {
    if (coin(rng) < density) x = static_cast<std::uint8_t>(dist(rng));
  }
  return {w, h, std::move(v)};
}

inline salgrain::SaliencyMap binary_map(std::mt19937_64& rng, std::size_t w, std::size_t h, double density) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<std::uint8_t> v(w * h);
  for (auto& x : v) x = coin(rng) < density ? 255 : 0;
  return {w, h, std::move(v)};
}

inline salgrain::Tensor random_tensor(std::mt19937_64& rng, std::vector<std::size_t> shape, double lo = -1.0,
                                      double hi = 1.0) {
  salgrain::Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

}  // namespace testing_support
