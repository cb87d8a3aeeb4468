#pragma once

#include <string>
#include <utility>
#include <vector>

namespace epsinas::cli {

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);
std::string sha256_bytes(const std::string& bytes);

/// Record of one invocation, written next to its outputs. Holds no
/// timestamps or host details, so identical runs give identical manifests.
struct RunManifest {
  std::string subcommand;
  std::vector<std::string> argv;
  std::vector<std::pair<std::string, std::string>> flags;
  std::string seed;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;

  std::string to_json() const;
  void write(const std::string& path) const;
};

/// `scores.csv` -> `scores.manifest.json`.
std::string manifest_path_for(const std::string& output);

}  // namespace epsinas::cli
