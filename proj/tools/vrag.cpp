// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "vrag/cli/commands.hpp"

int main(int argc, char** argv) { return vrag::run_cli(argc, argv, std::cout, std::cerr); }
