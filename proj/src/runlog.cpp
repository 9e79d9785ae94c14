#include "tonesr/runlog.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>

namespace tonesr::runlog {

namespace {
std::mutex g_mutex;
std::ofstream g_file;
bool g_quiet = false;
}  // namespace

void set_file(const std::string& path) {
    std::lock_guard<std::mutex> lock(g_mutex);
    if (g_file.is_open()) g_file.close();
    if (!path.empty()) g_file.open(path, std::ios::app);
}

void set_quiet(bool quiet) { g_quiet = quiet; }

void event(const std::string& name, const nlohmann::json& fields, const std::string& level) {
    std::lock_guard<std::mutex> lock(g_mutex);
    if (g_quiet && !g_file.is_open()) return;
    nlohmann::ordered_json j;
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    j["ts"] = std::chrono::duration<double>(now).count();
    j["level"] = level;
    j["event"] = name;
    for (const auto& [k, v] : fields.items()) j[k] = v;
    if (g_file.is_open())
        g_file << j.dump() << "\n" << std::flush;
    else
        std::cout << j.dump() << "\n";
}

}  // namespace tonesr::runlog
