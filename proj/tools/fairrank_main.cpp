#include <iostream>
#include <string>
#include <vector>

#include "fairrank/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return fairrank::cli::run(args, std::cout, std::cerr);
}
