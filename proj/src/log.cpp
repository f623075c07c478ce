#include "nc/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <string>

namespace nc::log {

namespace {

Level parse_level() {
    const char* raw = std::getenv("NC_LOG");
    if (raw == nullptr) return Level::Warn;
    const std::string value(raw);
    if (value == "error") return Level::Error;
    if (value == "warn") return Level::Warn;
    if (value == "info") return Level::Info;
    if (value == "debug") return Level::Debug;
    std::fprintf(stderr, "[warn] NC_LOG=%s not recognized, using warn\n", raw);
    return Level::Warn;
}

const char* level_name(Level level) {
    switch (level) {
        case Level::Error: return "error";
        case Level::Warn: return "warn";
        case Level::Info: return "info";
        case Level::Debug: return "debug";
    }
    return "?";
}

}  // namespace

Level threshold() {
    static const Level cached = parse_level();
    return cached;
}

void write(Level level, const std::string& message) {
    if (static_cast<int>(level) > static_cast<int>(threshold())) return;
    std::fprintf(stderr, "[%s] %s\n", level_name(level), message.c_str());
}

}  // namespace nc::log
