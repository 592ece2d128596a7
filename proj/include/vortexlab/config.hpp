#pragma once

// Run configuration: JSON text validated against the published schema
// (schemas/config.schema.json, compiled into the library) before use.

#include <nlohmann/json.hpp>

#include <string_view>

namespace vortexlab::config {

/// The schema text the library validates against.
std::string_view schema_text();

/// Parses and validates; throws ConfigError naming the offending location.
nlohmann::json parse(std::string_view text);

/// obj[key] when present, otherwise `fallback`.
template <class T>
T get(const nlohmann::json& obj, const char* key, T fallback) {
  return obj.is_object() && obj.contains(key) ? obj[key].get<T>() : fallback;
}

}  // namespace vortexlab::config
