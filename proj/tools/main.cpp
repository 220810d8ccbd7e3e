#include <iostream>

#include "cli/cli.hpp"

int main(int argc, char** argv) { return hac24::cli::run(argc, argv, std::cout, std::cerr); }
