#include "cinnrl/app/manifest.hpp"

#include "cinnrl/error.hpp"
#include "cinnrl/glucosim/dataset.hpp"
#include "cinnrl/numkit/digest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#ifndef CINNRL_GIT_DESCRIBE
#define CINNRL_GIT_DESCRIBE "unknown"
#endif

namespace cinnrl::app {

nlohmann::json RunManifest::to_json() const {
  return {{"command", command}, {"config", config},     {"git_describe", git_describe},
          {"started", started}, {"finished", finished}, {"files", files},
          {"metrics", metrics}};
}

RunManifest RunManifest::from_json(const nlohmann::json& doc) {
  try {
    RunManifest m;
    m.command = doc.at("command").get<std::string>();
    m.config = doc.at("config").get<std::string>();
    m.git_describe = doc.at("git_describe").get<std::string>();
    m.started = doc.at("started").get<std::string>();
    m.finished = doc.at("finished").get<std::string>();
    m.files = doc.at("files").get<std::map<std::string, std::string>>();
    m.metrics = doc.value("metrics", nlohmann::json::object());
    return m;
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("manifest: ") + ex.what());
  }
}

std::string git_describe() { return CINNRL_GIT_DESCRIBE; }

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const std::filesystem::path& dir, RunManifest manifest) {
  for (auto& [name, digest] : manifest.files) digest = num::sha256_file(dir / name);
  manifest.finished = utc_now();
  if (manifest.git_describe.empty()) manifest.git_describe = git_describe();
  glucosim::write_file_atomic(dir / kManifestName, manifest.to_json().dump(1) + "\n");
}

RunManifest read_manifest(const std::filesystem::path& dir) {
  std::ifstream in(dir / kManifestName);
  if (!in) throw ParseError("no manifest in " + dir.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError((dir / kManifestName).string() + ": " + ex.what());
  }
  return RunManifest::from_json(doc);
}

std::string files_digest(const RunManifest& manifest) {
  std::string lines;
  for (const auto& [name, digest] : manifest.files)
    if (name != "config.txt") lines += name + " " + digest + "\n";
  return num::sha256_hex(lines);
}

}  // namespace cinnrl::app
