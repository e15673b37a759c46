#ifndef BPMM_LOGGING_HPP
#define BPMM_LOGGING_HPP

#include <cstdlib>
#include <cstring>
#include <iostream>
#include <mutex>
#include <string>

namespace bpmm {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// Level comes from the BPMM_LOG environment variable (error|warn|info|debug).
inline LogLevel log_level() {
  static LogLevel level = [] {
    const char* env = std::getenv("BPMM_LOG");
    if (env == nullptr) return LogLevel::Warn;
    if (std::strcmp(env, "error") == 0) return LogLevel::Error;
    if (std::strcmp(env, "info") == 0) return LogLevel::Info;
    if (std::strcmp(env, "debug") == 0) return LogLevel::Debug;
    return LogLevel::Warn;
  }();
  return level;
}

inline void log_msg(LogLevel lvl, const std::string& msg) {
  if (lvl > log_level()) return;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  const char* tag = lvl == LogLevel::Error  ? "error"
                    : lvl == LogLevel::Warn ? "warn"
                    : lvl == LogLevel::Info ? "info"
                                            : "debug";
  std::cerr << "[bpmm " << tag << "] " << msg << "\n";
}

inline void log_error(const std::string& m) { log_msg(LogLevel::Error, m); }
inline void log_warn(const std::string& m) { log_msg(LogLevel::Warn, m); }
inline void log_info(const std::string& m) { log_msg(LogLevel::Info, m); }
inline void log_debug(const std::string& m) { log_msg(LogLevel::Debug, m); }

}  // namespace bpmm

#endif
