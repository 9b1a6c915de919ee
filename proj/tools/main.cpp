#include <vector>

#include "tbasis/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return tbasis::run_cli(args);
}
