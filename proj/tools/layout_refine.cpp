#include <iostream>

#include "layoutgen/cli/commands.hpp"

int main(int argc, char** argv) { return layoutgen::cli::run_cli(argc, argv, std::cout, std::cerr); }
