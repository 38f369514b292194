#include <iostream>

#include "treekern/cli.hpp"

int main(int argc, char** argv) { return treekern::cli::run(argc, argv, std::cout, std::cerr); }
