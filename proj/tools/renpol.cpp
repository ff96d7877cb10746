#include <iostream>

#include "renpol/cli.hpp"

int main(int argc, char** argv) { return renpol::cli::run(argc, argv, std::cout, std::cerr); }
