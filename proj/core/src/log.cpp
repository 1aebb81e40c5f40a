#include "faceval/log.hpp"

#include <cstdlib>
#include <iostream>

namespace faceval {

LogLevel log_threshold() {
  static const LogLevel level = [] {
    const char* env = std::getenv("FACEVAL_LOG");
    if (env == nullptr) return LogLevel::warn;
    const std::string v(env);
    if (v == "debug") return LogLevel::debug;
    if (v == "info") return LogLevel::info;
    if (v == "warn") return LogLevel::warn;
    if (v == "error") return LogLevel::error;
    if (v == "off") return LogLevel::off;
    return LogLevel::warn;
  }();
  return level;
}

void log_message(LogLevel level, const std::string& message) {
  if (level < log_threshold()) return;
  static const char* names[] = {"debug", "info", "warn", "error"};
  std::cerr << "faceval [" << names[static_cast<int>(level)] << "] "
            << message << '\n';
}

}  // namespace faceval
