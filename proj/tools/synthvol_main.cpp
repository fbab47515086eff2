#include <iostream>

#include "synthvol/cli.hpp"

int main(int argc, char** argv) { return synthvol::run_cli(argc, argv, std::cout, std::cerr); }
