#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) {
  std::ios::sync_with_stdio(false);
  return vxar::run_cli(argc, argv, {std::cin, std::cout, std::cerr});
}
