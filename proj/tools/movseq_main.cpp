#include "movseq/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return movseq::run_cli(argc, argv, std::cout, std::cerr); }
