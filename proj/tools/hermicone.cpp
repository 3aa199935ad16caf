#include <iostream>
#include <string>
#include <vector>

#include "hermicone/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return hermicone::run(args, std::cout, std::cerr);
}
