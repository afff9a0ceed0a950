// SPDX-License-Identifier: MIT
#include "gkwpi/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return gkwpi::cli::run(argc, argv, std::cout, std::cerr); }
