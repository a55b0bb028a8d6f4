#include <iostream>
#include <string>
#include <vector>

#include "survinfo/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return survinfo::cli::run(args, std::cout, std::cerr);
}
