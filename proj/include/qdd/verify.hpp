// verify.hpp - runnable invariant suites
//
// This software is licensed under the terms of the Apache Licence Version 2.0
// which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.

#pragma once

#include <string>
#include <vector>

namespace qdd {

struct CheckResult {
  std::string name;
  double value = 0.0;      // measured violation / deviation
  double threshold = 0.0;  // pass bound
  bool passed = false;
};

struct SuiteResult {
  std::string suite;
  std::vector<CheckResult> checks;
  bool passed() const {
    for (const auto& c : checks) {
      if (!c.passed) return false;
    }
    return true;
  }
};

SuiteResult verify_physics();
SuiteResult verify_scattering();
SuiteResult verify_interface();
SuiteResult verify_milne();
SuiteResult verify_device(bool with_tau_sweep = true);

/// suite in {physics, scattering, interface, milne, device, all};
/// throws config_error for unknown names.
std::vector<SuiteResult> verify_suites(const std::string& suite);

}  // namespace qdd
