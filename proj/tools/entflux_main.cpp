#include "entflux/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return entflux::cli::run_cli(argc, argv, std::cout, std::cerr); }
