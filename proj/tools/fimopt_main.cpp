#include <iostream>

#include "fimopt/cli/commands.hpp"

int main(int argc, char** argv) { return fimopt::cli::run_main(argc, argv, std::cout, std::cerr); }
