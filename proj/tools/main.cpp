#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return gcil::cli::run(argc, argv, std::cout, std::cerr); }
