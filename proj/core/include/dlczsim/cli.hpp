// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace dlczsim::cli {

/// Entry point of the command-line tool (run | fringe | tomo | chsh | delay |
/// lock | calibrate). Returns the process exit code; errors are reported as
/// machine-readable JSON on stderr.
int run_cli(int argc, const char* const* argv);

} // namespace dlczsim::cli
