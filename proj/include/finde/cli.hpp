#pragma once

namespace finde {

// Full command-line entry point (verbs: generate, train, predict, eval,
// sweep, demo-mass-spring). Returns the process exit code: 0 ok, 2 config
// error, 3 runtime failure.
int run_cli(int argc, char** argv);

}  // namespace finde
