#include <iostream>

#include "semicomp_cli/commands.hpp"

int main(int argc, char** argv) { return semicomp::cli::run_cli(argc, argv, std::cout, std::cerr); }
