#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "salgrain/cam_classifier.hpp"
#include "salgrain/tensor.hpp"

namespace salgrain {

// Binary layout, all integers little-endian:
//   "SALGRAIN" | u32 version | u32 model kind | u32 tensor count
//   per tensor: u32 rank, rank x u32 extents
//   payload: every tensor's values as IEEE-754 float32, in order
enum class ModelKind : std::uint32_t { CamClassifier = 1, MimicAutoencoder = 2 };

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelKind kind = ModelKind::CamClassifier;
  std::vector<Tensor> tensors;
};

std::string encode_checkpoint(ModelKind kind, std::span<const Tensor* const> tensors);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, ModelKind kind, std::span<const Tensor* const> tensors);
Checkpoint load_checkpoint(const std::filesystem::path& path);

void save_cam_classifier(const std::filesystem::path& path, const CamClassifier& model);
CamClassifier load_cam_classifier(const std::filesystem::path& path);
CamClassifier cam_classifier_from(Checkpoint checkpoint);

}  // namespace salgrain
