#include "fracheat/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return fracheat::run(argc, argv, std::cout, std::cerr); }
