#include <vector>

#include "fedda/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return fedda::run_cli(args);
}
