#include "salgrain/pgm.hpp"

#include <cctype>
#include <fstream>
#include <iterator>

#include "salgrain/error.hpp"

namespace salgrain {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(const std::string& bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  unsigned long number(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    unsigned long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + static_cast<unsigned long>(bytes_[pos_] - '0');
      if (value > 1'000'000'000UL) throw Error(ErrorCode::MalformedHeader, std::string("PGM ") + what + " too large");
      ++pos_;
    }
    if (pos_ == start) throw Error(ErrorCode::MalformedHeader, std::string("PGM header: missing ") + what);
    return value;
  }

  void single_whitespace() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw Error(ErrorCode::MalformedHeader, "PGM header must end with a whitespace byte");
    }
    ++pos_;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_pgm(const SaliencyMap& map) {
  std::string out = "P5\n" + std::to_string(map.width()) + " " + std::to_string(map.height()) + "\n255\n";
  auto v = map.values();
  out.append(reinterpret_cast<const char*>(v.data()), v.size());
  return out;
}

SaliencyMap decode_pgm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw Error(ErrorCode::MalformedHeader, "not a binary PGM (expected P5 magic)");
  }
  HeaderReader in(bytes);
  in.advance(2);
  const auto width = in.number("width");
  const auto height = in.number("height");
  const auto maxval = in.number("maxval");
  if (width == 0 || height == 0) throw Error(ErrorCode::MalformedHeader, "PGM dimensions must be positive");
  if (maxval != 255) throw Error(ErrorCode::UnsupportedMaxval, "PGM maxval " + std::to_string(maxval) + " != 255");
  in.single_whitespace();
  const std::size_t need = width * height;
  if (bytes.size() - in.pos() < need) throw Error(ErrorCode::TruncatedPayload, "PGM payload is truncated");
  std::vector<std::uint8_t> values(bytes.begin() + static_cast<std::ptrdiff_t>(in.pos()),
                                   bytes.begin() + static_cast<std::ptrdiff_t>(in.pos() + need));
  return SaliencyMap(width, height, std::move(values));
}

SaliencyMap read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_pgm(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_pgm(const SaliencyMap& map, const std::filesystem::path& path) {
  const std::string bytes = encode_pgm(map);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

SaliencyMap image_to_gray(const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 1) {
    throw Error(ErrorCode::ShapeMismatch, "expected a [1,H,W] image, got " + shape_string(image.shape()));
  }
  std::vector<double> v(image.values().begin(), image.values().end());
  return to_saliency(UnitMap(image.dim(2), image.dim(1), std::move(v)));
}

Tensor gray_to_image(const SaliencyMap& gray) {
  auto unit = to_unit(gray);
  return Tensor({1, gray.height(), gray.width()}, std::vector<double>(unit.values().begin(), unit.values().end()));
}

}  // namespace salgrain
