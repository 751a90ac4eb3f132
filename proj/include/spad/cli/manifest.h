#ifndef SPAD_CLI_MANIFEST_H_
#define SPAD_CLI_MANIFEST_H_

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace spad::cli {

inline constexpr char kToolVersion[] = "1.0.0";

// Lowercase hex SHA-256.
std::string Sha256Hex(std::string_view bytes);
// Throws IoError when the file cannot be read.
std::string Sha256File(const std::string &path);

struct ArtifactRef {
  std::string flag;  // command-line option naming the file
  std::string path;
  std::string sha256;

  bool operator==(const ArtifactRef &o) const = default;
};

// Provenance written beside every artifact: the command that made it, the
// resolved config with the origin of each value, and content hashes of
// what was read and written.
struct Manifest {
  std::string subcommand;
  std::vector<std::string> args;  // after the subcommand name
  nlohmann::json config;
  nlohmann::json origins;
  nlohmann::json seeds;
  nlohmann::json metrics = nlohmann::json::object();
  std::vector<ArtifactRef> inputs;
  std::vector<ArtifactRef> outputs;

  void AddInput(const std::string &flag, const std::string &path);
  void AddOutput(const std::string &flag, const std::string &path);
  nlohmann::json ToJson() const;
  // Throws FormatError on malformed input.
  static Manifest FromJson(const nlohmann::json &j);
};

std::string ManifestPath(const std::string &artifact);
// Writes the manifest beside each output.
void WriteManifests(const Manifest &m);
Manifest ReadManifest(const std::string &path);

}  // namespace spad::cli

#endif  // SPAD_CLI_MANIFEST_H_
