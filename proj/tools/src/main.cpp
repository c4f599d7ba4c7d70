#include <iostream>
#include <string>
#include <vector>

#include "rnlmf/cli/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return rnlmf::cli::run_command(args, std::cout, std::cerr);
}
