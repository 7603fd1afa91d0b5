#include "manifest.hpp"

#include <chrono>
#include <ctime>
#include <fmt/format.h>
#include <fstream>
#include <json.hpp>

#include "dfsmem/error.hpp"

#ifndef DFSMEM_VERSION
#define DFSMEM_VERSION "unknown"
#endif

namespace dfsmem::cli {

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void Manifest::write(const std::string& path) const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["toolkit_version"] = DFSMEM_VERSION;
  j["config_digest"] = config_digest;
  j["seed"] = seed;
  j["started"] = started;
  j["finished"] = finished;
  j["outputs"] = outputs;
  std::ofstream out(path);
  if (!out) throw ConfigError(fmt::format("cannot write manifest '{}'", path));
  out << j.dump(2) << '\n';
}

std::string manifest_path(const std::string& output) { return output + ".manifest.json"; }

}  // namespace dfsmem::cli
