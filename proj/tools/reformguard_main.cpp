#include <iostream>

#include "reformguard/cli.hpp"

int main(int argc, char** argv) { return reformguard::run_cli(argc, argv, std::cout, std::cerr); }
