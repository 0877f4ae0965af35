#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kfp/parallel.hpp"

namespace kfp {

struct VerifyOptions {
  std::string level = "core";  // core: reduced budgets; full: complete suite
  uint64_t seed = 0xB5EED;
  int workers = default_workers();
  // Self-test knob: scales the kernel normalizing constant inside the
  // kernel-mass check (and nowhere else). Any value != 1 must fail it.
  double cn_scale = 1.0;
  // When non-empty, only checks whose name contains this substring run.
  std::string filter;
};

// One named check. Pass means measured <= tolerance. Composite checks report
// their worst part as a deviation normalized by that part's allowance, with
// tolerance 1; single-quantity checks report the raw deviation.
struct CheckResult {
  std::string name;
  std::string statement;  // the identity or bound being exercised
  int criterion = 0;      // acceptance list position; 0 = extra invariant
  double measured = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  double seconds = 0.0;
  std::string detail;  // worst sub-case, or the error message on a throw
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  int failed = 0;
  double seconds = 0.0;
};

VerifyReport run_verify(const VerifyOptions& opt);

// Registered check names in run order (the full suite).
std::vector<std::string> verify_check_names();

}  // namespace kfp
