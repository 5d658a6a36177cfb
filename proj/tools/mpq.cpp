#include <iostream>

#include "mpq/cli.hpp"

int main(int argc, char** argv) {
  return mpq::cli::main_entry(argc, argv, std::cout, std::cerr);
}
