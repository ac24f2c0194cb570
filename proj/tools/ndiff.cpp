#include <iostream>

#include "ndiff/cli.hpp"

int main(int argc, char** argv) { return ndiff::cli::run(argc, argv, std::cout, std::cerr); }
