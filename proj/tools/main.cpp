// SPDX-License-Identifier: Apache-2.0
#include "dlczsim/cli.hpp"

int main(int argc, char** argv) { return dlczsim::cli::run_cli(argc, argv); }
