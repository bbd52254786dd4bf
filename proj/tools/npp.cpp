#include <iostream>

#include "npp/cli.hpp"

int main(int argc, char** argv) { return npp::run_cli(argc, argv, std::cout, std::cerr); }
