#include "dualmv/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return dualmv::cli::run(argc, argv, std::cout, std::cerr); }
