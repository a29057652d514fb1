#pragma once

// Small helpers for strict YAML schemas: unknown keys are rejected and every
// error names the 1-based source line.

#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>

#include <yaml-cpp/yaml.h>

#include "vsp/errors.hpp"

namespace vsp::yaml {

inline int line_of(const YAML::Node& node) { return node.Mark().line >= 0 ? node.Mark().line + 1 : 0; }

inline void check_keys(const YAML::Node& map, std::initializer_list<std::string_view> allowed,
                       std::string_view context) {
  if (!map.IsMap()) throw ConfigError(std::string(context) + " must be a mapping", line_of(map));
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw ConfigError("unknown key '" + key + "' in " + std::string(context), line_of(kv.first));
  }
}

template <class T>
T as(const YAML::Node& node, std::string_view what) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("invalid value for " + std::string(what), line_of(node));
  }
}

template <class T>
T require(const YAML::Node& map, const std::string& key, std::string_view context) {
  const YAML::Node node = map[key];
  if (!node) throw ConfigError("missing key '" + key + "' in " + std::string(context), line_of(map));
  return as<T>(node, key);
}

template <class T>
T get_or(const YAML::Node& map, const std::string& key, T fallback) {
  const YAML::Node node = map[key];
  return node ? as<T>(node, key) : fallback;
}

template <class T>
std::optional<T> get_optional(const YAML::Node& map, const std::string& key) {
  const YAML::Node node = map[key];
  if (!node) return std::nullopt;
  return as<T>(node, key);
}

/// Accepts a plain number or a "p/q" rational string.
inline double as_rational(const YAML::Node& node, std::string_view what) {
  const auto text = as<std::string>(node, what);
  const auto slash = text.find('/');
  try {
    if (slash == std::string::npos) return std::stod(text);
    const double p = std::stod(text.substr(0, slash));
    const double q = std::stod(text.substr(slash + 1));
    if (q == 0.0) throw ConfigError("zero denominator in " + std::string(what), line_of(node));
    return p / q;
  } catch (const std::logic_error&) {
    throw ConfigError("invalid number '" + text + "' for " + std::string(what), line_of(node));
  }
}

inline YAML::Node load_file(const std::string& path) {
  try {
    return YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw ConfigError("cannot open file '" + path + "'");
  } catch (const YAML::ParserException& e) {
    throw ConfigError(path + ": " + e.msg, e.mark.line + 1);
  }
}

}  // namespace vsp::yaml
