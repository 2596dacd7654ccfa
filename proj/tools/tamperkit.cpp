#include <iostream>

#include "tamperkit/cli.hpp"

int main(int argc, char** argv) { return tamperkit::run_cli(argc, argv, std::cout, std::cerr); }
