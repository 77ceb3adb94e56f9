#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "etsync/consensus.hpp"
#include "etsync/errors.hpp"
#include "etsync/sim.hpp"

namespace etsync::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kParse = 2,
  kValidation = 3,
  kNumerics = 4,
  kRuntime = 5,
  kVerification = 6,
};

int exit_code_for(ErrorKind kind);

/// Human-readable constants table with pass/fail flags per hypothesis.
void print_design_report(std::ostream& os, const Scenario& scenario);

/// Entry point shared by the executable and the tests.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace etsync::cli
