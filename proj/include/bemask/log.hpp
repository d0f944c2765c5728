#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace bemask::log {

enum class Level { kDebug = 0, kInfo = 1, kWarn = 2, kError = 3 };

inline Level& threshold() {
    static Level level = [] {
        if (const char* env = std::getenv("BEMASK_LOG")) {
            if (std::strcmp(env, "debug") == 0) return Level::kDebug;
            if (std::strcmp(env, "info") == 0) return Level::kInfo;
            if (std::strcmp(env, "warn") == 0) return Level::kWarn;
            if (std::strcmp(env, "error") == 0) return Level::kError;
        }
        return Level::kWarn;
    }();
    return level;
}

inline void set_threshold(Level level) { threshold() = level; }

inline bool set_threshold(const std::string& name) {
    if (name == "debug") { set_threshold(Level::kDebug); return true; }
    if (name == "info") { set_threshold(Level::kInfo); return true; }
    if (name == "warn") { set_threshold(Level::kWarn); return true; }
    if (name == "error") { set_threshold(Level::kError); return true; }
    return false;
}

inline void emit(Level level, const char* tag, const std::string& msg) {
    if (level < threshold()) return;
    std::fprintf(stderr, "[%s] %s\n", tag, msg.c_str());
}

inline void debug(const std::string& msg) { emit(Level::kDebug, "debug", msg); }
inline void info(const std::string& msg) { emit(Level::kInfo, "info", msg); }
inline void warn(const std::string& msg) { emit(Level::kWarn, "warn", msg); }
inline void error(const std::string& msg) { emit(Level::kError, "error", msg); }

}  // namespace bemask::log
