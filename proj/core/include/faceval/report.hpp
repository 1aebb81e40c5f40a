#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace faceval {

/// Fixed-format double for report files: stable across runs, no locale.
std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::string to_string() const;
};

/// Writes via a temporary file in the same directory plus an atomic
/// rename, so a failed command never leaves a partial output behind.
void write_text_atomic(const std::filesystem::path& path,
                       const std::string& content);

std::string read_text(const std::filesystem::path& path);

}  // namespace faceval
