#pragma once

#include <string>

namespace nc::log {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// Threshold parsed once from the NC_LOG environment variable
// (error|warn|info|debug); defaults to warn. Unrecognized values warn once.
Level threshold();

void write(Level level, const std::string& message);

inline void error(const std::string& m) { write(Level::Error, m); }
inline void warn(const std::string& m) { write(Level::Warn, m); }
inline void info(const std::string& m) { write(Level::Info, m); }
inline void debug(const std::string& m) { write(Level::Debug, m); }

}  // namespace nc::log
