#include <iostream>

#include "mwlab/cli.hpp"

int main(int argc, char** argv) { return mwlab::run_cli(argc, argv, std::cout, std::cerr); }
