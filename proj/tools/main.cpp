#include <iostream>
#include <string>
#include <vector>

#include "btforge/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return btforge::run_cli(args, std::cout, std::cerr);
}
