#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "parcelplan/nn/matrix.hpp"

namespace parcelplan::nn {

inline constexpr int kCheckpointFormatVersion = 1;

// A JSON manifest plus a binary blob of little-endian float64 values. The
// manifest lists every tensor (name, rows, cols, offset in values) in blob
// order; `metadata` carries caller content such as the run configuration.
struct Checkpoint {
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<std::pair<std::string, Matrix>> tensors;

  const Matrix& tensor(const std::string& name) const;
};

// Writes <manifest_path> and a blob next to it (manifest stem + ".bin").
void write_checkpoint(const std::string& manifest_path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::string& manifest_path);

// Stable 64-bit FNV-1a of a byte string, used for config hashes.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace parcelplan::nn
