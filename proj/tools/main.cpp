#include <iostream>

#include "qpencil/cli.hpp"

int main(int argc, char** argv) { return qpencil::run_cli(argc, argv, std::cout, std::cerr); }
