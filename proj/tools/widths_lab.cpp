#include <iostream>

#include "widthlab/cli/commands.hpp"

int main(int argc, char** argv) { return widthlab::cli::run(argc, argv, std::cout, std::cerr); }
