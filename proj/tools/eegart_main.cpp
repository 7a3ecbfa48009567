#include <iostream>

#include "eegart/app/cli.hpp"

int main(int argc, char** argv) {
  return eegart::app::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
