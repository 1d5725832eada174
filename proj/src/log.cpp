#include <atomic>
#include <iostream>
#include <mutex>

#include "kgforge/common.hpp"

namespace kgforge {

namespace {
std::atomic<int> g_level{static_cast<int>(LogLevel::info)};
std::mutex g_log_mutex;

void emit(std::string_view message) {
  std::lock_guard lock(g_log_mutex);
  std::cerr << "[kgforge] " << message << '\n';
}
}  // namespace

void set_log_level(LogLevel level) { g_level = static_cast<int>(level); }

LogLevel log_level() { return static_cast<LogLevel>(g_level.load()); }

void log_info(std::string_view message) {
  if (g_level >= static_cast<int>(LogLevel::info)) emit(message);
}

void log_debug(std::string_view message) {
  if (g_level >= static_cast<int>(LogLevel::debug)) emit(message);
}

}  // namespace kgforge
