#include <iostream>

#include "gsink_cli/cli.hpp"

int main(int argc, char** argv) {
  return gsink::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
