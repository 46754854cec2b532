#include "oodmol/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <zlib.h>

#include "oodmol/encoder.hpp"
#include "oodmol/error.hpp"

namespace oodmol {
namespace {

constexpr char kMagic[8] = {'O', 'O', 'D', 'M', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& at) {
  if (at + sizeof(T) > in.size()) throw Error(ErrorKind::Io, "checkpoint truncated");
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, in.data() + at, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  at += sizeof(T);
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

std::string take_string(const std::string& in, std::size_t& at) {
  const auto len = take<std::uint32_t>(in, at);
  if (at + len > in.size()) throw Error(ErrorKind::Io, "checkpoint truncated");
  std::string s = in.substr(at, len);
  at += len;
  return s;
}

std::uint32_t crc_of(const std::string& bytes, std::size_t len) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(len)));
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.kind.size()));
  out += ckpt.kind;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.header.size()));
  out += ckpt.header;
  put<std::uint64_t>(out, static_cast<std::uint64_t>(ckpt.params.size()));
  for (Eigen::Index i = 0; i < ckpt.params.size(); ++i) put<double>(out, ckpt.params[i]);
  put<std::uint32_t>(out, crc_of(out, out.size()));
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) + 4 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorKind::Io, "not a checkpoint (bad magic)");
  }
  std::size_t at = bytes.size() - 4;
  const auto stored = take<std::uint32_t>(bytes, at);
  if (stored != crc_of(bytes, bytes.size() - 4)) throw Error(ErrorKind::Io, "checkpoint checksum mismatch");

  at = sizeof(kMagic);
  const auto version = take<std::uint32_t>(bytes, at);
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::Io, "unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.kind = take_string(bytes, at);
  ckpt.header = take_string(bytes, at);
  const auto count = take<std::uint64_t>(bytes, at);
  if (count > (bytes.size() - at) / sizeof(double)) throw Error(ErrorKind::Io, "checkpoint truncated");
  ckpt.params.resize(static_cast<Eigen::Index>(count));
  for (std::uint64_t i = 0; i < count; ++i) ckpt.params[static_cast<Eigen::Index>(i)] = take<double>(bytes, at);
  if (at != bytes.size() - 4) throw Error(ErrorKind::Io, "trailing bytes in checkpoint");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorKind::Io, "cannot write " + path.string());
  const std::string bytes = encode_checkpoint(ckpt);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error(ErrorKind::Io, "short write to " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return decode_checkpoint(ss.str());
}

Checkpoint encoder_checkpoint(const Encoder& model) {
  nlohmann::json h{{"dim", model.config().dim}, {"layers", model.config().layers}};
  return {"encoder", h.dump(), model.params()};
}

Encoder encoder_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.kind != "encoder") throw Error(ErrorKind::Io, "checkpoint holds a " + ckpt.kind + ", not an encoder");
  EncoderConfig cfg;
  try {
    const auto h = nlohmann::json::parse(ckpt.header);
    cfg.dim = h.at("dim").get<int>();
    cfg.layers = h.at("layers").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Io, std::string("bad encoder checkpoint header: ") + e.what());
  }
  return Encoder(cfg, ckpt.params);
}

}  // namespace oodmol
