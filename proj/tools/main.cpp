#include <iostream>

#include "phylograd_cli/cli.hpp"

int main(int argc, char** argv) { return phylograd::cli::run(argc, argv, std::cout, std::cerr); }
