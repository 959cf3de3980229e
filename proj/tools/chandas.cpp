#include <iostream>

#include "chandas/cli.hpp"

int main(int argc, char** argv) { return chandas::cli::run(argc, argv, std::cout, std::cerr); }
