#include <iostream>

#include "spectune/cli.hpp"

int main(int argc, char** argv) { return spectune::run_cli(argc, argv, std::cout, std::cerr); }
