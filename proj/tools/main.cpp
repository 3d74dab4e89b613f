#include "vidtraj/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return vidtraj::cli::run(argc, argv, std::cout, std::cerr); }
