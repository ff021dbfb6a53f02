#include <iostream>

#include "macf/cli.hpp"

int main(int argc, char** argv) { return macf::cli_main(argc, argv, std::cout, std::cerr); }
