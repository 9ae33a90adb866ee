// Copyright 2026 The road Authors
// SPDX-License-Identifier: Apache-2.0

#include "road/cli.hpp"

int main(int argc, char** argv) { return road::cli::main(argc, argv); }
