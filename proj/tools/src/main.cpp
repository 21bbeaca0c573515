#include <iostream>

#include "viewrank/cli/commands.hpp"

int main(int argc, char** argv) { return viewrank::cli::run(argc, argv, std::cout, std::cerr); }
