#include "qndtomo/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return qndtomo::cli::run(argc, argv, std::cout, std::cerr); }
