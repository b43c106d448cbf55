#include <iostream>

#include "fedekd/cli.hpp"

int main(int argc, char** argv) { return fedekd::cli_main(argc, argv, std::cout, std::cerr); }
