#include <iostream>

#include "schurerk/cli/commands.hpp"

int main(int argc, char** argv) { return schurerk::cli::run(argc, argv, std::cout, std::cerr); }
