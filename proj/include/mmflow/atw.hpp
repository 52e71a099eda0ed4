#pragma once

// One minimizing-movements step solved exactly by min-cut.

#include "mmflow/core.hpp"
#include "mmflow/distance.hpp"
#include "mmflow/perimeter.hpp"

#include <iosfwd>
#include <vector>

namespace mmflow {

class MarginBreach : public Error {
 public:
  MarginBreach(long step, const std::string& what);
  long step;
};

class InfeasibleConstraints : public Error {
 public:
  using Error::Error;
};

/// Everything a step needs besides the current set.
struct StepContext {
  PerimeterModel J;
  Anisotropy psi;
  Nonlinearity G;
  Forcing f;
  double h = 1e-3;
  int margin = 8;
};

/// Energy F -> sum_{i in F} unary(i) + J(F) with hard constraints.
struct StepEnergy {
  PerimeterModel J;
  Grid grid;
  Field unary;  // +-inf on forced cells, world units (already scaled by dx^2)
  CellSet forcedIn;
  CellSet forcedOut;
};

struct FlowStats {
  long nodes = 0;
  long edges = 0;
  long augmentations = 0;
};

struct StepResult {
  CellSet minimal;
  CellSet maximal;
  double energy = 0.0;
  FlowStats flowStats;
};

/// Unary g(sd/h) dx^2 - fk dx^2 on the cells of `stored`. For
/// BoundedComplement, `stored` is the complement K of the actual set and the
/// energy is the dual one in K: g~(s) = -g(-s) and -fk.
StepEnergy build_step_energy(const CellSet& stored, Phase phase, const PerimeterModel& J,
                             const Nonlinearity& n, const Anisotropy& a, double fk, double h);

/// Same energy with the dissipation truncated from below: g v (-n).
StepEnergy build_truncated_energy(const CellSet& e, const StepContext& ctx, double fk,
                                  double n);

/// Minimal and maximal minimizers by a single max-flow. Cells whose unary
/// term dominates all incident pair weights are decided before the flow.
StepResult minimize_step(const StepEnergy& se);

/// Objective value of F (forced-in terms excluded); +inf if F violates a
/// hard constraint.
double step_energy_value(const StepEnergy& se, const CellSet& f);

/// T^-_{h,t} (Minimal) or T^+_{h,t} (Maximal) of E, t in step k. The phase
/// of the result equals the phase of the input. Throws MarginBreach if the
/// stored set of the result meets the margin band.
PhaseSet atw_step(const PhaseSet& e, const StepContext& ctx, long k, MinimizerChoice choice);

struct TruncationReport {
  std::vector<CellSet> chain;
  bool nested = true;
  /// Last element equals the minimal minimizer of the untruncated energy.
  bool reachesMinimal = false;
};

/// Minimal minimizers E_n of the truncated energies, one per n in nList
/// (sorted increasingly). Requires a = +inf.
TruncationReport truncation_sequence_check(const CellSet& e, const StepContext& ctx, long k,
                                           const std::vector<double>& nList);

/// Graph instance as CSV rows (kind, from, to, capacity) in quantized units.
void write_graph_csv(std::ostream& os, const StepEnergy& se);

/// Quantization of real energies for the flow solver.
inline constexpr double kCapacityScale = 1099511627776.0;  // 2^40

}  // namespace mmflow
