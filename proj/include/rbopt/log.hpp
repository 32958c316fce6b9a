#pragma once

#include <string_view>

namespace rbopt::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

void set_level(Level level);
Level level();

void debug(std::string_view msg);
void info(std::string_view msg);
void warn(std::string_view msg);
void error(std::string_view msg);

// Number of warnings emitted since start-up; used by tests that expect one.
long warning_count();

}  // namespace rbopt::log
