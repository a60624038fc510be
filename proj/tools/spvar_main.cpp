#include "spvar/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return spvar::cli::run_command(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
