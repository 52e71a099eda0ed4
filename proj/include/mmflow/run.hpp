#pragma once

// Batch runs: evolve a configured initial condition, evaluate the checks the
// configuration activates and write frames, curves and a report.

#include "mmflow/config.hpp"
#include "mmflow/levelset.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mmflow {

struct CheckResult {
  std::string name;
  bool pass = true;
  double worst = 0.0;
  double tolerance = 0.0;
  std::string unit;
  std::string detail;
};

struct RadiusRow {
  double t = 0.0;
  double measured = 0.0;
  double exact = 0.0;  // NaN when no closed law applies
  double barrier = 0.0;
  double anisometry = 1.0;
};

struct FdRow {
  double t = 0.0;
  double hausdorff = 0.0;  // MMS vs FD zero level, world units
  double fdRadius = 0.0;
  double exact = 0.0;
};

struct RunReport {
  std::string name;
  std::string configText;
  long steps = 0;
  long stepsDone = 0;
  std::vector<double> displacement;  // per step
  std::vector<RadiusRow> radius;     // initial disk only, t = 0 first
  std::vector<FdRow> fd;
  std::vector<RefinementRow> refinement;
  std::vector<long> fattening;
  std::vector<CheckResult> checks;
  std::string error;  // MarginBreach or NestingViolation, with step and level
  std::vector<std::string> frames;

  bool ok() const;
  const CheckResult* check(const std::string& name) const;
};

struct RunOptions {
  int threads = 1;
  /// Artifacts are written only when set.
  std::optional<std::filesystem::path> out;
};

RunReport run(const RunConfig& cfg, const RunOptions& opt = {});

/// Plain-text tree: "key: value" lines, two spaces per nesting level.
void write_report(std::ostream& os, const RunReport& rep);

}  // namespace mmflow
