#include <iostream>
#include <string>
#include <vector>

#include "tocheck/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return tocheck::run_cli(args, std::cout, std::cerr);
}
