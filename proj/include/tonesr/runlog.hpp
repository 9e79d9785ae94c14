#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace tonesr::runlog {

// JSON-lines logging: one object per line with ts, level, event + fields.
// Default sink is stdout; set_file redirects.
void set_file(const std::string& path);  // empty -> stdout
void set_quiet(bool quiet);

void event(const std::string& name, const nlohmann::json& fields = {},
           const std::string& level = "info");

}  // namespace tonesr::runlog
