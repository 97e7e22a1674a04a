#pragma once

#include <json.hpp>

#include <filesystem>
#include <map>
#include <string>

namespace cinnrl::app {

/// Provenance record written last into every output directory.
struct RunManifest {
  std::string command;
  std::string config;
  std::string git_describe;
  std::string started;
  std::string finished;
  /// Output file name (relative to the run directory) -> SHA-256.
  std::map<std::string, std::string> files;
  /// Headline numbers for `report`.
  nlohmann::json metrics = nlohmann::json::object();

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& doc);
};

inline constexpr const char* kManifestName = "manifest.json";

std::string git_describe();
/// UTC, ISO 8601 with seconds.
std::string utc_now();

/// Hashes `files` relative to `dir`, stamps the finish time and writes the
/// manifest atomically.
void write_manifest(const std::filesystem::path& dir, RunManifest manifest);
RunManifest read_manifest(const std::filesystem::path& dir);

/// SHA-256 over the sorted "name sha256" lines of the manifest's files,
/// config.txt excluded.
std::string files_digest(const RunManifest& manifest);

}  // namespace cinnrl::app
