#include <iostream>

#include "fcslam/cli.hpp"

int main(int argc, char** argv) { return fcslam::cli_dispatch(argc, argv, std::cout, std::cerr); }
