#pragma once

#include <cstdlib>
#include <iostream>
#include <string>

namespace stn {

enum class LogLevel { error = 0, info = 1, debug = 2 };

/// Level comes from STN_LOG_LEVEL in {error, info, debug}; default info.
inline LogLevel log_level() {
    static LogLevel level = [] {
        const char* env = std::getenv("STN_LOG_LEVEL");
        if (!env) return LogLevel::info;
        std::string s(env);
        if (s == "error") return LogLevel::error;
        if (s == "debug") return LogLevel::debug;
        return LogLevel::info;
    }();
    return level;
}

inline void log_line(LogLevel level, const std::string& msg) {
    if (level > log_level()) return;
    const char* tag = level == LogLevel::error ? "error" : level == LogLevel::info ? "info" : "debug";
    (level == LogLevel::error ? std::cerr : std::cout) << "[" << tag << "] " << msg << std::endl;
}

inline void log_error(const std::string& msg) { log_line(LogLevel::error, msg); }
inline void log_info(const std::string& msg) { log_line(LogLevel::info, msg); }
inline void log_debug(const std::string& msg) { log_line(LogLevel::debug, msg); }

}  // namespace stn
