#include <iostream>

#include "planar/cli.h"

int main(int argc, char** argv) { return planar::run_cli(argc, argv, std::cout, std::cerr); }
