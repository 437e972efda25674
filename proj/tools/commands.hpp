#pragma once

namespace chfkit::cli {

/// Parses arguments, runs one subcommand and returns the process exit code.
int run(int argc, char** argv);

} // namespace chfkit::cli
