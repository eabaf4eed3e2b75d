#include <iostream>

#include "aggsim/io/cli.hpp"

int main(int argc, char** argv) { return aggsim::io::run_cli(argc, argv, std::cout, std::cerr); }
