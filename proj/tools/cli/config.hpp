#pragma once

#include <boost/property_tree/ptree.hpp>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace dfsmem::cli {

/// Allowed keys per section.
using Schema = std::map<std::string, std::set<std::string>>;

/// INI-style scenario file with strict key checking and typed getters.
class Config {
 public:
  Config() = default;

  static Config load(const std::string& path, const Schema& schema);
  static Config parse(const std::string& text, const Schema& schema);

  /// "section.key=value"; the key must be in the schema.
  void apply_override(const std::string& assignment);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::optional<std::string>& fallback = {}) const;
  double get_double(const std::string& key, const std::optional<double>& fallback = {}) const;
  /// Finite and >= 0.
  double get_nonnegative(const std::string& key, const std::optional<double>& fallback = {}) const;
  std::int64_t get_int(const std::string& key, const std::optional<std::int64_t>& fallback = {}) const;
  std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) const;
  /// Comma- or space-separated numbers; "none" or empty gives an empty list.
  std::vector<double> get_list(const std::string& key, const std::optional<std::vector<double>>& fallback = {}) const;

  /// Sorted "section.key = value" lines of every set field.
  std::string canonical() const;

 private:
  void check(const std::string& key) const;

  Schema schema_;
  boost::property_tree::ptree tree_;
};

}  // namespace dfsmem::cli
