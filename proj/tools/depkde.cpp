#include <iostream>

#include "depkde/cli.hpp"

int main(int argc, char** argv) {
  return depkde::cli::run_cli(argc, argv, std::cout, std::cerr);
}
