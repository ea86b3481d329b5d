#pragma once

#include <string_view>
#include <utility>

#include <spdlog/spdlog.h>

namespace btforge::log {

/// Routes output to stderr at the level named by BTFORGE_LOG
/// (quiet|info|debug, default info). Safe to call more than once.
void init_from_env();
void set_level(std::string_view name);

template <typename... Args>
void debug(fmt::format_string<Args...> f, Args&&... args) {
  spdlog::debug(fmt::format(f, std::forward<Args>(args)...));
}

template <typename... Args>
void info(fmt::format_string<Args...> f, Args&&... args) {
  spdlog::info(fmt::format(f, std::forward<Args>(args)...));
}

template <typename... Args>
void warn(fmt::format_string<Args...> f, Args&&... args) {
  spdlog::warn(fmt::format(f, std::forward<Args>(args)...));
}

}  // namespace btforge::log
