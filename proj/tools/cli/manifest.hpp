#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dfsmem::cli {

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view data);

std::string utc_timestamp();

struct Manifest {
  std::string command;
  std::string config_digest;  // hex FNV-1a of the canonical configuration
  std::uint64_t seed = 0;
  std::string started;
  std::string finished;
  std::vector<std::string> outputs;

  /// JSON written to `path`.
  void write(const std::string& path) const;
};

/// `<output>.manifest.json`
std::string manifest_path(const std::string& output);

}  // namespace dfsmem::cli
