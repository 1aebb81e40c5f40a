#pragma once

#include <string>

namespace faceval {

enum class LogLevel { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

/// Threshold comes from the FACEVAL_LOG environment variable
/// (debug|info|warn|error|off), read once. Default: warn.
LogLevel log_threshold();

void log_message(LogLevel level, const std::string& message);

inline void log_debug(const std::string& m) { log_message(LogLevel::debug, m); }
inline void log_info(const std::string& m) { log_message(LogLevel::info, m); }
inline void log_warn(const std::string& m) { log_message(LogLevel::warn, m); }
inline void log_error(const std::string& m) { log_message(LogLevel::error, m); }

}  // namespace faceval
