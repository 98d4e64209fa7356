#include "salgrain/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "salgrain/error.hpp"

namespace salgrain {

namespace {

constexpr char kMagic[8] = {'S', 'A', 'L', 'G', 'R', 'A', 'I', 'N'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error(ErrorCode::TruncatedPayload, "checkpoint is truncated");
  }

  const char* take(std::size_t n) {
    need(n);
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(ModelKind kind, std::span<const Tensor* const> tensors) {
  std::string out(kMagic, sizeof(kMagic));
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(kind));
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const Tensor* t : tensors) {
    put_u32(out, static_cast<std::uint32_t>(t->rank()));
    for (auto d : t->shape()) put_u32(out, static_cast<std::uint32_t>(d));
  }
  for (const Tensor* t : tensors) {
    for (double v : t->values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader in(bytes);
  if (std::memcmp(in.take(sizeof(kMagic)), kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorCode::MalformedHeader, "not a checkpoint (bad magic)");
  }
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::MalformedHeader, "unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ck;
  const std::uint32_t kind = in.u32();
  if (kind != 1 && kind != 2) throw Error(ErrorCode::MalformedHeader, "unknown model kind");
  ck.kind = static_cast<ModelKind>(kind);

  const std::uint32_t count = in.u32();
  std::vector<std::vector<std::size_t>> shapes(count);
  for (auto& shape : shapes) {
    const std::uint32_t rank = in.u32();
    if (rank > 8) throw Error(ErrorCode::MalformedHeader, "implausible tensor rank");
    for (std::uint32_t r = 0; r < rank; ++r) shape.push_back(in.u32());
  }
  for (auto& shape : shapes) {
    std::vector<double> values(shape_product(shape));
    for (auto& v : values) {
      float f = std::bit_cast<float>(in.u32());
      v = static_cast<double>(f);
    }
    ck.tensors.emplace_back(std::move(shape), std::move(values));
  }
  if (!in.done()) throw Error(ErrorCode::MalformedHeader, "trailing bytes after checkpoint payload");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, ModelKind kind, std::span<const Tensor* const> tensors) {
  const std::string bytes = encode_checkpoint(kind, tensors);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

void save_cam_classifier(const std::filesystem::path& path, const CamClassifier& model) {
  const auto params = parameters(model);
  save_checkpoint(path, ModelKind::CamClassifier, params);
}

CamClassifier cam_classifier_from(Checkpoint ck) {
  if (ck.kind != ModelKind::CamClassifier) throw Error(ErrorCode::MalformedHeader, "checkpoint is not a classifier");
  auto& t = ck.tensors;
  if (t.size() < 4 || t.size() % 2 != 0) throw Error(ErrorCode::MalformedHeader, "bad classifier tensor count");
  CamClassifier model;
  std::size_t in_channels = 0;
  for (std::size_t i = 0; i + 2 < t.size(); i += 2) {
    if (t[i].rank() != 4 || t[i + 1].rank() != 1 || t[i + 1].dim(0) != t[i].dim(0) ||
        (i > 0 && t[i].dim(1) != in_channels)) {
      throw Error(ErrorCode::MalformedHeader, "inconsistent conv layer shapes in checkpoint");
    }
    in_channels = t[i].dim(0);
    model.convs.push_back({std::move(t[i]), std::move(t[i + 1])});
  }
  Tensor& hw = t[t.size() - 2];
  Tensor& hb = t[t.size() - 1];
  if (hw.rank() != 2 || hw.dim(1) != in_channels || hb.rank() != 1 || hb.dim(0) != hw.dim(0)) {
    throw Error(ErrorCode::MalformedHeader, "inconsistent head shapes in checkpoint");
  }
  model.head_weight = std::move(hw);
  model.head_bias = std::move(hb);
  return model;
}

CamClassifier load_cam_classifier(const std::filesystem::path& path) {
  return cam_classifier_from(load_checkpoint(path));
}

}  // namespace salgrain
