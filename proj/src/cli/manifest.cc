#include "spad/cli/manifest.h"

#include <openssl/evp.h>

#include <fstream>
#include <iterator>
#include <memory>
#include <sstream>

#include "spad/base/error.h"

namespace spad::cli {

std::string Sha256Hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int size = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &size, EVP_sha256(), nullptr) != 1) {
    throw NumericError("SHA-256 computation failed");
  }
  static const char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < size; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 15];
  }
  return out;
}

std::string Sha256File(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return Sha256Hex(bytes);
}

void Manifest::AddInput(const std::string &flag, const std::string &path) {
  inputs.push_back({flag, path, Sha256File(path)});
}

void Manifest::AddOutput(const std::string &flag, const std::string &path) {
  outputs.push_back({flag, path, Sha256File(path)});
}

namespace {

nlohmann::json RefsToJson(const std::vector<ArtifactRef> &refs) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto &r : refs) out.push_back({{"flag", r.flag}, {"path", r.path}, {"sha256", r.sha256}});
  return out;
}

std::vector<ArtifactRef> RefsFromJson(const nlohmann::json &j) {
  std::vector<ArtifactRef> out;
  for (const auto &e : j) {
    out.push_back({e.at("flag").get<std::string>(), e.at("path").get<std::string>(),
                   e.at("sha256").get<std::string>()});
  }
  return out;
}

}  // namespace

nlohmann::json Manifest::ToJson() const {
  return {{"tool", "spad"},
          {"version", kToolVersion},
          {"subcommand", subcommand},
          {"args", args},
          {"config", config},
          {"origins", origins},
          {"seeds", seeds},
          {"metrics", metrics},
          {"inputs", RefsToJson(inputs)},
          {"outputs", RefsToJson(outputs)}};
}

Manifest Manifest::FromJson(const nlohmann::json &j) {
  try {
    if (j.at("tool").get<std::string>() != "spad") throw FormatError("not a spad manifest");
    Manifest m;
    m.subcommand = j.at("subcommand").get<std::string>();
    m.args = j.at("args").get<std::vector<std::string>>();
    m.config = j.at("config");
    m.origins = j.at("origins");
    m.seeds = j.at("seeds");
    m.metrics = j.at("metrics");
    m.inputs = RefsFromJson(j.at("inputs"));
    m.outputs = RefsFromJson(j.at("outputs"));
    return m;
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
}

std::string ManifestPath(const std::string &artifact) { return artifact + ".manifest.json"; }

void WriteManifests(const Manifest &m) {
  const std::string text = m.ToJson().dump(2) + "\n";
  for (const auto &out : m.outputs) {
    std::ofstream file(ManifestPath(out.path), std::ios::binary);
    if (!file) throw IoError("cannot write " + ManifestPath(out.path));
    file << text;
    if (!file) throw IoError("failed writing " + ManifestPath(out.path));
  }
}

Manifest ReadManifest(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return Manifest::FromJson(nlohmann::json::parse(buffer.str()));
  } catch (const nlohmann::json::parse_error &e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace spad::cli
