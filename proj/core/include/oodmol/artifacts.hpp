#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace oodmol {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temporary file, then renames over `path`.
void atomic_write(const std::filesystem::path& path, const std::string& bytes);

// Exclusive lock on a run directory; throws Locked if already held.
class RunLock {
 public:
  explicit RunLock(const std::filesystem::path& dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::filesystem::path path_;
};

struct Manifest {
  std::string tool_version;
  std::string config_json;
  std::map<std::string, std::string> inputs;   // path -> sha256
  std::map<std::string, std::string> outputs;  // path relative to the run dir -> sha256
  std::map<std::string, double> timings;       // phase -> seconds
  std::string results_json = "{}";

  std::string to_json() const;
  static Manifest from_json(const std::string& text);

  static Manifest load(const std::filesystem::path& dir);
  void save(const std::filesystem::path& dir) const;

  // Hashes the file under `dir` and records it.
  void record_output(const std::filesystem::path& dir, const std::string& relpath);
  // Throws HashMismatch if a recorded output is missing or changed.
  void verify(const std::filesystem::path& dir) const;
};

inline constexpr const char* kManifestName = "manifest.json";

}  // namespace oodmol
