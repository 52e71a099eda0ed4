#pragma once

// Level-set lifting of the set scheme and its time iteration.

#include "mmflow/atw.hpp"
#include "mmflow/core.hpp"

#include <vector>

namespace mmflow {

class NestingViolation : public Error {
 public:
  NestingViolation(long step, double level);
  long step;
  double level;
};

/// Superlevel sets {u >= s_i} of a level function. Levels at or below the
/// outside (margin) value give sets containing the margin; those are stored
/// through their complement.
struct LevelStack {
  std::vector<double> levels;
  std::vector<PhaseSet> sets;
};

/// s_i = floor + i (ceil - floor) / L, i = 1..L.
std::vector<double> uniform_levels(double floor_value, double ceil_value, int L);

LevelStack decompose(const LevelFunction& u, int L, int margin);

/// u(x) = max{s_i : x in E_i}, floor where no level contains x.
LevelFunction reconstruct(const LevelStack& stack, const Grid& g, double floor_value,
                          double ceil_value);

struct LiftOptions {
  int levelCount = 64;
  MinimizerChoice choice = MinimizerChoice::Minimal;
  int threads = 1;
};

/// Evolves every superlevel set by one scheme step (step index k) and
/// reconstructs. Throws NestingViolation if the evolved sets are not nested.
LevelFunction lift_step(const LevelFunction& u, const StepContext& ctx, long k,
                        const LiftOptions& opt = {});

/// Stack-level version of lift_step; returns the evolved stack.
LevelStack lift_stack(const LevelStack& stack, const StepContext& ctx, long k,
                      const LiftOptions& opt = {});

struct EvolutionRecord {
  std::vector<double> times;
  std::vector<LevelFunction> snapshots;
  /// Per step, the largest distance any superlevel interface moved: over
  /// cells that changed side, the Euclidean distance to the side they left.
  std::vector<double> perStepDisplacement;
};

struct EvolveOptions : LiftOptions {
  /// Keep every n-th snapshot (the initial and final ones are always kept).
  int snapshotStride = 1;
};

EvolutionRecord evolve(const LevelFunction& u0, const StepContext& ctx, double T,
                       const EvolveOptions& opt = {});

/// Largest displacement between two nested-or-not sets as described for
/// EvolutionRecord::perStepDisplacement (0 if equal, +inf if one is empty and
/// the other not).
double interface_displacement(const CellSet& before, const CellSet& after);

struct ModulusReport {
  double lipschitz = 0.0;  // modulus omega(r) = lipschitz * r measured on u0
  double worstViolationCells = 0.0;
  long worstSnapshot = -1;
  bool pass = true;  // worst violation <= 1 cell
};

/// Checks that {u >= s'} dilated by omega^{-1}(s' - s) stays inside {u >= s}
/// for every snapshot and level pair.
ModulusReport modulus_check(const LevelFunction& u0, const EvolutionRecord& record);

struct RefinementRow {
  double h = 0.0;
  double gap = 0.0;  // sup over common times of max |u_h - u_finest|
};

struct RefinementStudy {
  std::vector<RefinementRow> rows;
  bool nonincreasing = true;
};

/// Runs evolve for each h (decreasing) and compares with the finest run at the
/// output times of the coarsest one.
RefinementStudy h_refinement_study(const LevelFunction& u0, const StepContext& ctx,
                                   const std::vector<double>& hList, double T,
                                   const EvolveOptions& opt = {});

struct FatteningReport {
  std::vector<long> disagreeingCells;  // per recorded time
  long worst = 0;
};

/// Cells where the T- and T+ liftings of u0 disagree.
FatteningReport fattening_report(const LevelFunction& u0, const StepContext& ctx, double T,
                                 const EvolveOptions& opt = {});

}  // namespace mmflow
