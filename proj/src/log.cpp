#include "finde/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace finde {

LogLevel log_level() {
  static LogLevel lvl = [] {
    const char* env = std::getenv("FINDE_LOG");
    if (env == nullptr) return LogLevel::Error;
    if (std::strcmp(env, "debug") == 0) return LogLevel::Debug;
    if (std::strcmp(env, "info") == 0) return LogLevel::Info;
    return LogLevel::Error;
  }();
  return lvl;
}

void log_write(LogLevel lvl, const std::string& msg) {
  const char* tag = lvl == LogLevel::Error  ? "error"
                    : lvl == LogLevel::Info ? "info"
                                            : "debug";
  std::fprintf(stderr, "[%s] %s\n", tag, msg.c_str());
}

}  // namespace finde
