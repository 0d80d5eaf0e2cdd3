#include "tsfilt/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return tsfilt::run_cli(argc, argv, std::cout, std::cerr); }
