// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "e2eqr/cli/commands.hpp"

int main(int argc, char** argv) { return e2eqr::cli::run(argc, argv, std::cout, std::cerr); }
