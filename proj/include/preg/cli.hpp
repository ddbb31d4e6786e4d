#pragma once

#include <string>
#include <vector>

#include "preg/report.hpp"

namespace preg::cli {

// Exit codes: 0 success, 2 usage error, 3 numeric failure (singular matrix,
// non-convergence, incomplete decomposition), 4 problem-definition error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitProblem = 4;

struct RunResult {
  int exit_code = kExitOk;
  report::json report;     // full structured report (may be partial on failure)
  std::string rendered;    // in the requested format
  std::string diagnostic;  // nonempty when exit_code != 0
};

// Execute one subcommand; args exclude the program name.
RunResult run(const std::vector<std::string>& args);

// Parse, run, print to stdout or --output, return the exit code.
int main_entry(int argc, char** argv);

}  // namespace preg::cli
