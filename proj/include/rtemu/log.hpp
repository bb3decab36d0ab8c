#pragma once

#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace rtemu {

enum class LogLevel : int { error = 0, warn = 1, info = 2, debug = 3 };

/// Verbosity comes from the RTEMU_LOG environment variable
/// (error|warn|info|debug); default is warn.
inline LogLevel log_threshold() {
    static const LogLevel level = [] {
        const char* v = std::getenv("RTEMU_LOG");
        if (v == nullptr) return LogLevel::warn;
        if (std::strcmp(v, "error") == 0) return LogLevel::error;
        if (std::strcmp(v, "info") == 0) return LogLevel::info;
        if (std::strcmp(v, "debug") == 0) return LogLevel::debug;
        return LogLevel::warn;
    }();
    return level;
}

inline void log_msg(LogLevel level, const char* fmt, ...) {
    if (static_cast<int>(level) > static_cast<int>(log_threshold())) return;
    static const char* names[] = {"error", "warn", "info", "debug"};
    std::fprintf(stderr, "rtemu [%s] ", names[static_cast<int>(level)]);
    std::va_list args;
    va_start(args, fmt);
    std::vfprintf(stderr, fmt, args);
    va_end(args);
    std::fputc('\n', stderr);
}

}  // namespace rtemu
