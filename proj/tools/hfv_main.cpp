#include <iostream>
#include <string>
#include <vector>

#include "hfv/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return hfv::run_cli(args, std::cout, std::cerr);
}
