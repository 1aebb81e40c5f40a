#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "faceval/errors.hpp"

namespace faceval::cli {

// Exit codes: 0 success, 1 evaluation-level warnings present,
// 2 input/validation error, 3 internal error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitWarnings = 1;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitInternal = 3;

/// A single JSON config document. Every CLI flag overrides its config
/// counterpart; lookups use dotted keys ("ransac.min_inliers").
class ConfigDoc {
 public:
  ConfigDoc() : doc_(nlohmann::json::object()) {}
  explicit ConfigDoc(const std::string& path);

  const nlohmann::json* find(const std::string& dotted_key) const;

  /// Overrides `value` from the config when the flag was not given.
  template <typename T>
  void merge(size_t flag_count, const std::string& key, T& value) const {
    if (flag_count > 0) return;
    if (const nlohmann::json* v = find(key)) {
      try {
        value = v->get<T>();
      } catch (const nlohmann::json::exception& e) {
        throw ValidationError("config field '" + key + "': " + e.what());
      }
    }
  }

  const nlohmann::json& raw() const { return doc_; }

 private:
  nlohmann::json doc_;
};

/// Throws ValidationError when a required input path is missing or does
/// not exist. All inputs are checked before any work starts.
void require_input_file(const std::string& path, const std::string& what);

/// Prints collected warnings to the diagnostic stream; returns the exit
/// code implied by their presence.
int finish_with_warnings(const std::vector<std::string>& warnings);

}  // namespace faceval::cli
