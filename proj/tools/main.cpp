#include <iostream>
#include <string>
#include <vector>

#include "dmp/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return dmp::cli::run(args, std::cout, std::cerr);
}
