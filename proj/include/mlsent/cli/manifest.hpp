#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

namespace mlsent::cli {

inline constexpr const char* kManifestFormat = "mlsent-manifest";

struct Manifest {
  std::string command;
  std::string stage;  // pipeline stages only
  nlohmann::json config = nlohmann::json::object();
  std::map<std::string, std::string> inputs;     // path -> sha256
  std::map<std::string, std::string> artifacts;  // path -> sha256
  std::string started;
  std::string finished;
  std::uint64_t seed = 0;
  std::string status = "OK";
  std::string error;
  nlohmann::json extra = nlohmann::json::object();

  void add_input(const std::filesystem::path& path);
  void add_artifact(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  // Stamps `finished` and writes pretty JSON.
  void write(const std::filesystem::path& path);
};

std::string utc_timestamp();

// Manifest path for a command whose output is a single file:
// out/report.json -> out/report.manifest.json
std::filesystem::path manifest_path_for(const std::filesystem::path& output_file);

}  // namespace mlsent::cli
