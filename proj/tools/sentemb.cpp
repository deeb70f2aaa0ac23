// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "sentemb/cli.hpp"

int main(int argc, char** argv) { return sentemb::cli::run(argc, argv, std::cout, std::cerr); }
