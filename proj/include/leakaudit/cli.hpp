#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace leakaudit::cli {

enum ExitCode : int { kClean = 0, kFindings = 1, kUsage = 2 };

/// Runs one invocation (argv[0] is the program name). Reports go to `out`
/// (or the --out file), diagnostics to `err`. Output is written only once
/// the whole report has been produced.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace leakaudit::cli
