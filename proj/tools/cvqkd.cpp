#include <iostream>

#include "cvqkd_cli.hpp"

int main(int argc, char** argv) { return cvqkd::cli::run(argc, argv, std::cout, std::cerr); }
