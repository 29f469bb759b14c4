#pragma once

#include <string>
#include <vector>

namespace rdecay {

struct CheckResult {
  std::string suite;
  std::string name;
  bool pass = false;
  double measured = 0.0;   // worst observed value of the checked quantity
  double tolerance = 0.0;  // limit it is compared against
  std::string detail;
};

/// Suites: model, specfun, resolvent, bounds, or all.
std::vector<std::string> suite_names();
std::vector<CheckResult> run_suite(const std::string& suite);

}  // namespace rdecay
