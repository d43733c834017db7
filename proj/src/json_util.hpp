#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "salrgb/error.hpp"

namespace salrgb::detail {

// Rejects keys outside `allowed` so typos in config files fail loudly.
inline void require_known_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                               std::string_view section) {
  if (!j.is_object()) throw ConfigError(std::string(section) + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (const auto a : allowed) known = known || a == key;
    if (!known) throw ConfigError(std::string(section) + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read_optional(const nlohmann::json& j, const char* key, T& out, std::string_view section) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string(section) + "." + key + ": " + e.what());
  }
}

}  // namespace salrgb::detail
