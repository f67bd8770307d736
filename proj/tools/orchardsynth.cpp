#include <iostream>
#include <string>
#include <vector>

#include "orchardsynth/pipeline.hpp"

int main(int argc, char **argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return orchard::run_cli(args, std::cout, std::cerr);
}
