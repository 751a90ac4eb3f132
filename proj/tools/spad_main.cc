#include <iostream>
#include <string>
#include <vector>

#include "spad/cli/app.h"

int main(int argc, char **argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return spad::cli::Run(args, std::cout, std::cerr);
}
