#pragma once

// The numbered acceptance criteria, shared by `mmflow verify` and the
// acceptance test binary.

#include <cstdint>
#include <string>
#include <vector>

namespace mmflow {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  int threads = 1;
  std::uint64_t seed = 20240601;
};

/// Criterion ids of a suite: "acceptance" (1..13) or "quick" (the property
/// criteria that finish in seconds).
std::vector<int> suite_criteria(const std::string& suite);

CriterionResult run_criterion(int id, const AcceptanceOptions& opt);

/// "criterion  3  FAIL  <title>  (<detail>; 12.3 s)"
std::string format_result(const CriterionResult& r);

}  // namespace mmflow
