#include "oodmol/artifacts.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "oodmol/error.hpp"

namespace oodmol {

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::Io, "SHA-256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

void atomic_write(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    f.flush();
    if (!f) throw Error(ErrorKind::Io, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot move " + tmp.string() + " into place: " + ec.message());
}

RunLock::RunLock(const std::filesystem::path& dir) : path_(dir / ".lock") {
  std::filesystem::create_directories(dir);
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) throw Error(ErrorKind::Locked, "run directory " + dir.string() + " is locked (" + path_.string() + ")");
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

RunLock::~RunLock() {
  std::error_code ec;
  std::filesystem::remove(path_, ec);
}

std::string Manifest::to_json() const {
  nlohmann::json j;
  j["version"] = 1;
  j["tool"] = tool_version;
  j["config"] = config_json.empty() ? nlohmann::json::object() : nlohmann::json::parse(config_json);
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  j["timings"] = timings;
  j["results"] = nlohmann::json::parse(results_json);
  return j.dump(2) + "\n";
}

Manifest Manifest::from_json(const std::string& text) {
  Manifest m;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("version").get<int>() != 1) throw Error(ErrorKind::HashMismatch, "unsupported manifest version");
    m.tool_version = j.at("tool").get<std::string>();
    m.config_json = j.at("config").dump();
    m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
    m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
    m.timings = j.at("timings").get<std::map<std::string, double>>();
    m.results_json = j.at("results").dump();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::HashMismatch, std::string("malformed manifest: ") + e.what());
  }
  return m;
}

Manifest Manifest::load(const std::filesystem::path& dir) {
  const auto path = dir / kManifestName;
  if (!std::filesystem::exists(path)) throw Error(ErrorKind::HashMismatch, "no manifest in " + dir.string());
  return from_json(read_file(path));
}

void Manifest::save(const std::filesystem::path& dir) const { atomic_write(dir / kManifestName, to_json()); }

void Manifest::record_output(const std::filesystem::path& dir, const std::string& relpath) {
  outputs[relpath] = sha256_file(dir / relpath);
}

void Manifest::verify(const std::filesystem::path& dir) const {
  for (const auto& [rel, hash] : outputs) {
    const auto path = dir / rel;
    if (!std::filesystem::exists(path)) throw Error(ErrorKind::HashMismatch, "missing artifact " + path.string());
    if (sha256_file(path) != hash) throw Error(ErrorKind::HashMismatch, "artifact changed: " + path.string());
  }
}

}  // namespace oodmol
