#include <iostream>

#include "jan/cli.hpp"

int main(int argc, char** argv) { return jan::cli::run(argc, argv, std::cout, std::cerr); }
