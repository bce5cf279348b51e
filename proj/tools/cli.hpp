#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mortlaw::cli {

enum ExitCode : int { ok = 0, usage_error = 2, not_converged = 3 };

/// Runs one CLI invocation; args excludes the program name. Diagnostics go to err.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

/// SHA-256 of a file's bytes as lowercase hex.
std::string sha256_file(const std::string &path);

} // namespace mortlaw::cli
