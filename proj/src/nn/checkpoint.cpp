#include "parcelplan/nn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <iomanip>
#include <sstream>

#include "parcelplan/error.hpp"
#include "parcelplan/text.hpp"

namespace parcelplan::nn {

namespace {

std::filesystem::path blob_path_for(const std::filesystem::path& manifest) {
  std::filesystem::path blob = manifest;
  blob.replace_extension(".bin");
  return blob;
}

void append_le(std::string& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
}

double read_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  return std::bit_cast<double>(bits);
}

}  // namespace

const Matrix& Checkpoint::tensor(const std::string& name) const {
  for (const auto& [n, m] : tensors) {
    if (n == name) return m;
  }
  fail(ErrorCode::Lookup, "checkpoint has no tensor '" + name + "'");
}

void write_checkpoint(const std::string& manifest_path, const Checkpoint& checkpoint) {
  const std::filesystem::path manifest(manifest_path);
  const std::filesystem::path blob = blob_path_for(manifest);

  nlohmann::json entries = nlohmann::json::array();
  std::string bytes;
  std::size_t offset = 0;
  for (const auto& [name, m] : checkpoint.tensors) {
    entries.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"offset", offset}});
    for (double v : m.data()) append_le(bytes, v);
    offset += m.size();
  }
  nlohmann::json doc = {
      {"format", "parcelplan-checkpoint"},
      {"format_version", kCheckpointFormatVersion},
      {"blob", blob.filename().string()},
      {"dtype", "float64-le"},
      {"value_count", offset},
      {"tensors", std::move(entries)},
      {"metadata", checkpoint.metadata},
  };
  text::write_file(blob.string(), bytes);
  text::write_file(manifest.string(), doc.dump(2) + "\n");
}

Checkpoint read_checkpoint(const std::string& manifest_path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text::read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, "checkpoint manifest '" + manifest_path + "': " + e.what());
  }
  if (doc.value("format", "") != "parcelplan-checkpoint") {
    fail(ErrorCode::Parse, "'" + manifest_path + "' is not a checkpoint manifest");
  }
  if (doc.value("format_version", 0) != kCheckpointFormatVersion) {
    fail(ErrorCode::Parse, "unsupported checkpoint format version");
  }
  const auto blob = std::filesystem::path(manifest_path).parent_path() / doc.at("blob").get<std::string>();
  const std::string bytes = text::read_file(blob.string());
  const auto count = doc.at("value_count").get<std::size_t>();
  if (bytes.size() != count * 8) fail(ErrorCode::Parse, "checkpoint blob size does not match manifest");

  Checkpoint cp;
  cp.metadata = doc.value("metadata", nlohmann::json::object());
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  for (const auto& entry : doc.at("tensors")) {
    const auto rows = entry.at("rows").get<std::size_t>();
    const auto cols = entry.at("cols").get<std::size_t>();
    const auto offset = entry.at("offset").get<std::size_t>();
    if (offset + rows * cols > count) fail(ErrorCode::Parse, "checkpoint tensor exceeds blob");
    std::vector<double> values(rows * cols);
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = read_le(raw + 8 * (offset + i));
    cp.tensors.emplace_back(entry.at("name").get<std::string>(), Matrix(rows, cols, std::move(values)));
  }
  return cp;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

}  // namespace parcelplan::nn
