#include <iostream>

#include "ranatomy/cli.hpp"

int main(int argc, char** argv) { return ranatomy::cli_main(argc, argv, std::cout, std::cerr); }
