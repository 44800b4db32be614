#include "mlsent/cli/manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include "mlsent/digest.hpp"
#include "mlsent/error.hpp"

namespace mlsent::cli {

using nlohmann::json;
namespace fs = std::filesystem;

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

fs::path manifest_path_for(const fs::path& output_file) {
  return output_file.parent_path() / (output_file.stem().string() + ".manifest.json");
}

void Manifest::add_input(const fs::path& path) { inputs[fs::absolute(path).string()] = sha256_file(path); }

void Manifest::add_artifact(const fs::path& path) {
  if (fs::is_regular_file(path)) artifacts[fs::absolute(path).string()] = sha256_file(path);
}

json Manifest::to_json() const {
  json j{{"format", kManifestFormat},
         {"version", 1},
         {"command", command},
         {"status", status},
         {"seed", seed},
         {"started", started},
         {"finished", finished},
         {"config", config},
         {"inputs", inputs},
         {"artifacts", artifacts}};
  if (!stage.empty()) j["stage"] = stage;
  if (!error.empty()) j["error"] = error;
  for (const auto& item : extra.items()) j[item.key()] = item.value();
  return j;
}

void Manifest::write(const fs::path& path) {
  finished = utc_timestamp();
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << to_json().dump(2) << "\n";
}

}  // namespace mlsent::cli
