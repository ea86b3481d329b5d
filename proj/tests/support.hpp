#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "btforge/platform.hpp"

namespace btforge::test {

inline std::filesystem::path level_path(const std::string& name) { return std::filesystem::path(BTFORGE_LEVEL_DIR) / name; }
inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(BTFORGE_TEST_DATA_DIR) / name;
}
inline std::shared_ptr<const Level> data_level(const std::string& name) {
  return std::make_shared<const Level>(load_level_file(data_path(name)));
}
inline std::shared_ptr<const Level> bundled_level(const std::string& name) {
  return std::make_shared<const Level>(load_level_file(level_path(name)));
}

}  // namespace btforge::test
