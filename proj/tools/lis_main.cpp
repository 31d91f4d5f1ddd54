// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "lis/cli.hpp"

int main(int argc, char** argv) { return lis::cli::run(argc, argv, std::cout, std::cerr); }
