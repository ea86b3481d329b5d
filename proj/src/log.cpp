#include "btforge/log.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>

namespace btforge::log {

void set_level(std::string_view name) {
  if (name == "quiet") spdlog::set_level(spdlog::level::warn);
  else if (name == "info") spdlog::set_level(spdlog::level::info);
  else if (name == "debug") spdlog::set_level(spdlog::level::debug);
  else throw std::invalid_argument("BTFORGE_LOG must be quiet, info or debug, got '" + std::string(name) + "'");
}

void init_from_env() {
  static const bool once = [] {
    auto logger = spdlog::stderr_color_mt("btforge");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    return true;
  }();
  (void)once;
  const char* env = std::getenv("BTFORGE_LOG");
  set_level(env && *env ? env : "info");
}

}  // namespace btforge::log
