#include "salgrain/manifest.hpp"

#include <fstream>
#include <sstream>

#include "salgrain/error.hpp"
#include "salgrain/pgm.hpp"

namespace salgrain {

namespace {

std::vector<std::string> split_on(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(text);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!text.empty() && text.back() == sep) out.emplace_back();
  return out;
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

[[noreturn]] void bad_row(std::size_t line, const std::string& msg) {
  throw Error(ErrorCode::MalformedHeader, "manifest line " + std::to_string(line) + ": " + msg);
}

}  // namespace

Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir) {
  Manifest m;
  m.base_dir = base_dir;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kManifestHeader) bad_row(line_no, "unexpected header '" + line + "'");
      header_seen = true;
      continue;
    }
    const auto fields = split_on(line, ',');
    if (fields.size() != 6) bad_row(line_no, "expected 6 fields, got " + std::to_string(fields.size()));
    ManifestRow row;
    row.split = fields[0];
    if (row.split != "train" && row.split != "val" && row.split != "test" && row.split != "train_b") {
      bad_row(line_no, "unknown split '" + row.split + "'");
    }
    row.image_path = fields[1];
    if (row.image_path.empty()) bad_row(line_no, "missing image path");
    if (fields[2] != "0" && fields[2] != "1") bad_row(line_no, "label must be 0 or 1");
    row.label = fields[2] == "1" ? 1 : 0;
    row.saliency_path = fields[3];
    if (!fields[4].empty()) row.annotator_paths = split_on(fields[4], ';');
    if (!fields[5].empty()) {
      for (const auto& f : split_on(fields[5], ';')) {
        if (f != "0" && f != "1") bad_row(line_no, "correctness flags must be 0 or 1");
        row.correct_flags.push_back(f == "1");
      }
    }
    if (row.annotator_paths.size() != row.correct_flags.size()) {
      bad_row(line_no, "annotator_paths and correct_flags differ in length");
    }
    m.rows.push_back(std::move(row));
  }
  if (!header_seen) throw Error(ErrorCode::MalformedHeader, "manifest is empty");
  return m;
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read manifest " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  Manifest m = parse_manifest(buffer.str(), path.parent_path());
  auto check = [&](const std::string& rel) {
    if (rel.empty()) return;
    read_pgm(m.base_dir / rel);
  };
  for (const auto& row : m.rows) {
    check(row.image_path);
    check(row.saliency_path);
    for (const auto& a : row.annotator_paths) check(a);
  }
  return m;
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write manifest " + path.string());
  out << kManifestHeader << '\n';
  for (const auto& row : manifest.rows) {
    std::vector<std::string> flags;
    for (bool f : row.correct_flags) flags.push_back(f ? "1" : "0");
    out << row.split << ',' << row.image_path << ',' << row.label << ',' << row.saliency_path << ','
        << join(row.annotator_paths, ';') << ',' << join(flags, ';') << '\n';
  }
}

}  // namespace salgrain
