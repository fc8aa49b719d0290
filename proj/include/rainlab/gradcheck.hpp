#pragma once

#include <string>
#include <vector>

#include "rainlab/nn.hpp"

namespace rainlab {

struct SuiteCase {
  std::string name;
  GradCheckReport report;
};

// Finite-difference validation of every layer type and every loss on small
// seeded networks.  Deterministic; each case compares analytic gradients
// against central differences at the given relative tolerance.
std::vector<SuiteCase> gradient_suite(double tol = 1e-4);

bool suite_passed(const std::vector<SuiteCase>& cases);

}  // namespace rainlab
