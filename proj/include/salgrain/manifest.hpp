#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace salgrain {

// CSV with header
//   split,image_path,label,saliency_path,annotator_paths,correct_flags
// Paths are relative to the manifest's directory. annotator_paths and
// correct_flags are ';'-separated lists of equal length; flags are 0/1.
// Recognized splits: train, val, test, train_b (second split for mimic runs).
struct ManifestRow {
  std::string split;
  std::string image_path;
  int label = 0;
  std::string saliency_path;  // empty when absent
  std::vector<std::string> annotator_paths;
  std::vector<bool> correct_flags;

  friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

struct Manifest {
  std::filesystem::path base_dir;
  std::vector<ManifestRow> rows;
};

inline constexpr const char* kManifestHeader = "split,image_path,label,saliency_path,annotator_paths,correct_flags";

// Parses the CSV and checks that every referenced file exists and is a valid PGM.
Manifest read_manifest(const std::filesystem::path& path);
Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

}  // namespace salgrain
