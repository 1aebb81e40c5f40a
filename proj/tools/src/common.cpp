#include "common.hpp"

#include <filesystem>
#include <sstream>

#include "faceval/log.hpp"
#include "faceval/report.hpp"

namespace faceval::cli {

ConfigDoc::ConfigDoc(const std::string& path) {
  if (path.empty()) {
    doc_ = nlohmann::json::object();
    return;
  }
  try {
    doc_ = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!doc_.is_object()) {
    throw ValidationError(path + ": config must be a single JSON object");
  }
}

const nlohmann::json* ConfigDoc::find(const std::string& dotted_key) const {
  const nlohmann::json* node = &doc_;
  std::stringstream ss(dotted_key);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (!node->is_object()) return nullptr;
    auto it = node->find(part);
    if (it == node->end()) return nullptr;
    node = &*it;
  }
  return node;
}

void require_input_file(const std::string& path, const std::string& what) {
  if (path.empty()) {
    throw ValidationError("missing required input: " + what);
  }
  if (!std::filesystem::exists(path)) {
    throw ValidationError(what + " '" + path + "' does not exist");
  }
}

int finish_with_warnings(const std::vector<std::string>& warnings) {
  for (const std::string& w : warnings) log_warn(w);
  return warnings.empty() ? kExitOk : kExitWarnings;
}

}  // namespace faceval::cli
