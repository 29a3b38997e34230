#pragma once
#include <sstream>
#include <string>

namespace finde {

// Log levels selected via the FINDE_LOG environment variable:
// "error" (default), "info", "debug".
enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

LogLevel log_level();
void log_write(LogLevel lvl, const std::string& msg);

namespace detail {
template <typename... Args>
std::string log_format(Args&&... args) {
  std::ostringstream oss;
  (oss << ... << args);
  return oss.str();
}
}  // namespace detail

}  // namespace finde

#define FINDE_LOG_ERROR(...)                                              \
  do {                                                                    \
    ::finde::log_write(::finde::LogLevel::Error,                          \
                       ::finde::detail::log_format(__VA_ARGS__));         \
  } while (0)
#define FINDE_LOG_INFO(...)                                               \
  do {                                                                    \
    if (::finde::log_level() >= ::finde::LogLevel::Info)                  \
      ::finde::log_write(::finde::LogLevel::Info,                         \
                         ::finde::detail::log_format(__VA_ARGS__));       \
  } while (0)
#define FINDE_LOG_DEBUG(...)                                              \
  do {                                                                    \
    if (::finde::log_level() >= ::finde::LogLevel::Debug)                 \
      ::finde::log_write(::finde::LogLevel::Debug,                        \
                         ::finde::detail::log_format(__VA_ARGS__));       \
  } while (0)
