#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace orbitfit {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitViolations = 1,
    kExitConfig = 2,
    kExitIo = 3,
    kExitNumeric = 4,
};

/// Runs `orbitfit <subcommand> --config FILE [--output-dir DIR] [--seed N]`.
/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Writes `contents` to `path` through a temporary file and a rename.
void write_file_atomic(const std::string& path, const std::string& contents);

std::string version_string();

}  // namespace orbitfit
