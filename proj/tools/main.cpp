#include <iostream>

#include "mvc/cli.hpp"

int main(int argc, char** argv) {
  mvc::num::tune_allocator();
  return mvc::cli::run(argc, argv, std::cout, std::cerr);
}
