#include <iostream>

#include "kshrink/cli.hpp"

int main(int argc, char** argv) {
  return kshrink::cli::run(argc, argv, std::cout, std::cerr);
}
