#include <iostream>
#include <string>
#include <vector>

#include "poisonlab/cli/cli.h"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return poisonlab::cli::run(args, std::cout, std::cerr);
}
