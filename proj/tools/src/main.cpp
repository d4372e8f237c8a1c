#include <iostream>

#include "geoprune_cli/cli.hpp"

int main(int argc, char** argv) { return geoprune::cli::run_cli(argc, argv, std::cout, std::cerr); }
