#pragma once

namespace rostcli {

// Parses arguments, runs the requested subcommand, and returns the process
// exit code: 0 all non-vacuous tests pass, 1 at least one test failed,
// 2 configuration or validation error, 3 runtime error.
int run(int argc, char** argv);

}  // namespace rostcli
