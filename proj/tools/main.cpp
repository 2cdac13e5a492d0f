#include <iostream>

#include "klnmf/cli.hpp"

int main(int argc, char** argv) { return klnmf::cli::cli_main(argc, argv, std::cout, std::cerr); }
