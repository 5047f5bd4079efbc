#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cfhet::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
    kOk = 0,
    kConfigError = 2,
    kDataError = 3,
    kEstimationError = 4,
};

/// Runs one command. `args` excludes the program name. Reports go to `out`
/// (or the --out file); diagnostics and the auto-drawn seed go to `err`.
int run(std::vector<std::string> args, std::ostream& out, std::ostream& err);

/// Appends "--key value" for every flat key of a JSON config file that is not
/// already present on the command line. Arrays become comma lists; `true`
/// becomes a bare flag and `false` is skipped.
std::vector<std::string> merge_config_file(std::vector<std::string> args);

}  // namespace cfhet::cli
