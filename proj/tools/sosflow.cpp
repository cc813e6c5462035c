#include <iostream>
#include <string>
#include <vector>

#include "sosflow/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return sosflow::run_main(args, std::cout, std::cerr);
}
