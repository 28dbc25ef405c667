#include <iostream>

#include "qkdnet/cli.hpp"

int main(int argc, char** argv) { return qkdnet::cli::run_cli(argc, argv, std::cout, std::cerr); }
