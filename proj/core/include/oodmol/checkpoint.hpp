#pragma once

#include <filesystem>
#include <string>

#include <Eigen/Dense>

namespace oodmol {

class Encoder;

// Binary envelope shared by encoder and policy checkpoints:
//   "OODMCKPT" | u32 version | u32 len + kind | u32 len + header (JSON)
//   | u64 count | count x f64 (little-endian) | u32 CRC-32 of all prior bytes
struct Checkpoint {
  std::string kind;
  std::string header;
  Eigen::VectorXd params;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const Checkpoint& ckpt);
// Throws Io on bad magic, version, truncation or checksum failure.
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint encoder_checkpoint(const Encoder& model);
Encoder encoder_from_checkpoint(const Checkpoint& ckpt);

}  // namespace oodmol
