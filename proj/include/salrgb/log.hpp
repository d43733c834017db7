#pragma once

#include <iostream>
#include <string_view>

namespace salrgb::log {

inline bool& quiet() {
  static bool q = false;
  return q;
}

inline void info(std::string_view msg) {
  if (!quiet()) std::clog << "[salrgb] " << msg << '\n';
}

inline void warn(std::string_view msg) { std::clog << "[salrgb] warning: " << msg << '\n'; }

}  // namespace salrgb::log
