// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return scan::run_cli(argc, argv, std::cout, std::cerr); }
