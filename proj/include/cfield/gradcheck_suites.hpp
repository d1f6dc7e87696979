#pragma once

#include <string>
#include <vector>

#include "cfield/gradcheck.hpp"

namespace cfield {

struct SuiteResult {
  std::string name;
  GradCheckReport report;
};

struct SuiteSummary {
  std::vector<SuiteResult> results;
  bool pass = true;
  std::string to_string() const;
  std::string to_json() const;
};

// module: all | tensor | encoder | decoder | loss. Runs in f64. The encoder,
// decoder and composed checks differentiate with respect to every model
// parameter; "all" adds the end-to-end encoder + decoder + reweighted-MSE
// composition.
SuiteSummary run_gradcheck_suite(const std::string& module, double tol);

}  // namespace cfield
