#pragma once

#include <filesystem>
#include <string>

#include "salgrain/saliency_map.hpp"
#include "salgrain/tensor.hpp"

namespace salgrain {

// Binary PGM (P5, maxval 255). Writing emits exactly "P5\n<w> <h>\n255\n" and
// the row-major payload. Reading accepts any whitespace and '#' comments in the
// header, followed by a single whitespace byte before the payload.
std::string encode_pgm(const SaliencyMap& map);
SaliencyMap decode_pgm(const std::string& bytes);

SaliencyMap read_pgm(const std::filesystem::path& path);
void write_pgm(const SaliencyMap& map, const std::filesystem::path& path);

// [1,H,W] image in [0,1] <-> 8-bit grayscale.
SaliencyMap image_to_gray(const Tensor& image);
Tensor gray_to_image(const SaliencyMap& gray);

}  // namespace salgrain
