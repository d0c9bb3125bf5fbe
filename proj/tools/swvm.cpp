#include <iostream>
#include <string>
#include <vector>

#include "swvm/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return swvm::cli::run(args, std::cout, std::cerr);
}
