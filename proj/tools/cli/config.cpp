#include "config.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <sstream>

#include "dfsmem/error.hpp"

namespace dfsmem::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string strip_comments(const std::string& text) {
  std::istringstream in(text);
  std::string out, line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    out += line;
    out += '\n';
  }
  return out;
}

double parse_real(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError(fmt::format("field {}: '{}' is not a number", key, text));
  }
  if (!std::isfinite(v)) throw ConfigError(fmt::format("field {}: value must be finite", key));
  return v;
}

}  // namespace

Config Config::load(const std::string& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), schema);
}

Config Config::parse(const std::string& text, const Schema& schema) {
  Config c;
  c.schema_ = schema;
  std::istringstream in(strip_comments(text));
  try {
    boost::property_tree::ini_parser::read_ini(in, c.tree_);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(fmt::format("config syntax error: {}", e.message()));
  }
  for (const auto& [section, body] : c.tree_) {
    if (body.empty()) throw ConfigError(fmt::format("field '{}' must be inside a section", section));
    const auto it = schema.find(section);
    if (it == schema.end()) throw ConfigError(fmt::format("unknown section [{}]", section));
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw ConfigError(fmt::format("unknown field {}.{}", section, key));
    }
  }
  return c;
}

void Config::check(const std::string& key) const {
  const auto dot = key.find('.');
  if (dot == std::string::npos) throw ConfigError(fmt::format("field '{}' must be written as section.key", key));
  const auto it = schema_.find(key.substr(0, dot));
  if (it == schema_.end() || !it->second.count(key.substr(dot + 1))) {
    throw ConfigError(fmt::format("unknown field {}", key));
  }
}

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError(fmt::format("override '{}' must look like section.key=value", assignment));
  const std::string key = trim(assignment.substr(0, eq));
  check(key);
  tree_.put(key, trim(assignment.substr(eq + 1)));
}

bool Config::has(const std::string& key) const {
  check(key);
  return static_cast<bool>(tree_.get_optional<std::string>(key));
}

std::string Config::get_string(const std::string& key, const std::optional<std::string>& fallback) const {
  check(key);
  if (const auto v = tree_.get_optional<std::string>(key)) return trim(*v);
  if (fallback) return *fallback;
  throw ConfigError(fmt::format("missing required field {}", key));
}

double Config::get_double(const std::string& key, const std::optional<double>& fallback) const {
  check(key);
  if (const auto v = tree_.get_optional<std::string>(key)) return parse_real(key, *v);
  if (fallback) return *fallback;
  throw ConfigError(fmt::format("missing required field {}", key));
}

double Config::get_nonnegative(const std::string& key, const std::optional<double>& fallback) const {
  const double v = get_double(key, fallback);
  if (v < 0.0) throw ConfigError(fmt::format("field {}: must be >= 0, got {}", key, v));
  return v;
}

std::int64_t Config::get_int(const std::string& key, const std::optional<std::int64_t>& fallback) const {
  check(key);
  if (const auto v = tree_.get_optional<std::string>(key)) {
    const std::string t = trim(*v);
    std::int64_t out = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
      throw ConfigError(fmt::format("field {}: '{}' is not an integer", key, t));
    }
    return out;
  }
  if (fallback) return *fallback;
  throw ConfigError(fmt::format("missing required field {}", key));
}

std::uint64_t Config::get_seed(const std::string& key, std::uint64_t fallback) const {
  check(key);
  if (const auto v = tree_.get_optional<std::string>(key)) {
    const std::string t = trim(*v);
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
      throw ConfigError(fmt::format("field {}: '{}' is not a nonnegative integer", key, t));
    }
    return out;
  }
  return fallback;
}

std::vector<double> Config::get_list(const std::string& key, const std::optional<std::vector<double>>& fallback) const {
  check(key);
  const auto v = tree_.get_optional<std::string>(key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError(fmt::format("missing required field {}", key));
  }
  std::string text = trim(*v);
  if (text.empty() || text == "none") return {};
  std::replace(text.begin(), text.end(), ',', ' ');
  std::istringstream in(text);
  std::vector<double> out;
  std::string token;
  while (in >> token) out.push_back(parse_real(key, token));
  return out;
}

std::string Config::canonical() const {
  std::vector<std::string> lines;
  for (const auto& [section, body] : tree_) {
    for (const auto& [key, value] : body) lines.push_back(fmt::format("{}.{} = {}", section, key, trim(value.data())));
  }
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) out += l + '\n';
  return out;
}

}  // namespace dfsmem::cli
