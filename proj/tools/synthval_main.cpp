#include <iostream>

#include "synthval/cli.hpp"

int main(int argc, char** argv) { return synthval::dispatch(argc, argv, std::cout, std::cerr); }
