#include "lyap/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

namespace lyap::log {

Level threshold() {
    static const Level level = [] {
        const char* env = std::getenv("LYAP_LOG");
        const std::string v = env ? env : "";
        if (v == "error") return Level::error;
        if (v == "info") return Level::info;
        if (v == "debug") return Level::debug;
        return Level::warn;
    }();
    return level;
}

void write(Level level, const std::string& message) {
    if (static_cast<int>(level) > static_cast<int>(threshold())) return;
    static std::mutex mutex;
    static const char* names[] = {"error", "warn", "info", "debug"};
    std::lock_guard lock(mutex);
    std::cerr << "[lyap:" << names[static_cast<int>(level)] << "] " << message << "\n";
}

}  // namespace lyap::log
