#include "rbopt/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace rbopt::log {

namespace {
std::atomic<Level> g_level{Level::Info};
std::atomic<long> g_warnings{0};
std::mutex g_mutex;

void emit(Level lvl, const char* tag, std::string_view msg) {
  if (lvl < g_level.load()) return;
  std::lock_guard lock(g_mutex);
  std::clog << '[' << tag << "] " << msg << '\n';
}
}  // namespace

void set_level(Level level) { g_level = level; }
Level level() { return g_level.load(); }

void debug(std::string_view msg) { emit(Level::Debug, "debug", msg); }
void info(std::string_view msg) { emit(Level::Info, "info", msg); }
void warn(std::string_view msg) {
  ++g_warnings;
  emit(Level::Warn, "warn", msg);
}
void error(std::string_view msg) { emit(Level::Error, "error", msg); }

long warning_count() { return g_warnings.load(); }

}  // namespace rbopt::log
