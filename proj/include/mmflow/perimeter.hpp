#pragma once

// Generalized perimeters as pairwise nonnegative interactions on the grid.

#include "mmflow/core.hpp"

#include <iosfwd>
#include <vector>

namespace mmflow {

struct Offset {
  int di = 0;
  int dj = 0;
  /// Energy contributed per cut pair is weight * dx.
  double weight = 0.0;
};

struct PerimeterModel {
  enum class Kind { LocalCrofton, FractionalKernel };

  Kind kind = Kind::LocalCrofton;
  int neighborhood = 16;  // LocalCrofton: 8 or 16
  double s = 0.5;         // FractionalKernel exponent in (0, 1)
  int cutoffRadius = 0;   // FractionalKernel: cells
  /// Cell width the weights were built for; 0 when the weights are scale-free.
  double dx = 0.0;
  /// Both o and -o are listed, so every unordered cell pair is counted once.
  std::vector<Offset> weights;

  static PerimeterModel local_crofton(int neighborhood);
  /// Kernel |z|^-(2+s) restricted to |o| <= cutoff cells, sampled at grid
  /// spacing dx.
  static PerimeterModel fractional(double s, int cutoff, double dx);

  /// Largest |di| or |dj| among the offsets.
  int reach() const;
};

/// Directional length l(n) = sum over undirected offsets of w |o . n| that a
/// LocalCrofton model assigns to a straight interface with unit normal n.
double crofton_directional_length(const PerimeterModel& J, const Vec2& n);

/// Number of pairs (i in E, i+o in grid \ E) for each offset of J.
std::vector<long> cut_counts(const PerimeterModel& J, const CellSet& e);

/// sum_o w_o * dx * #{i in E : i+o in grid, i+o not in E}. Pairs leaving the
/// grid are not counted, so J(empty) = J(full grid) = 0 and J(E) = J(grid \ E).
double perimeter_energy(const PerimeterModel& J, const CellSet& e);

/// J(E & F) + J(E | F) <= J(E) + J(F) + 1e-9.
bool submodularity_check(const PerimeterModel& J, const CellSet& e, const CellSet& f);

/// Layer-cake sum over the superlevel sets {u >= s_i}, i >= 1, weighted by
/// s_i - s_{i-1}. The first level is the reference value of the integral.
double coarea_energy(const PerimeterModel& J, const LevelFunction& u,
                     const std::vector<double>& levels);

struct CurvatureProbe {
  int ci = 0;
  int cj = 0;
  std::vector<double> radii;  // cells
};

enum class ProbeSide { Outer, Inner };

struct CurvatureSample {
  double radius = 0.0;  // cells
  double value = 0.0;
  bool skipped = false;  // W \ E (Outer) or W & E (Inner) was empty
};

/// Difference quotients (J(E | W) - J(E)) / |W \ E| (Outer) or
/// (J(E) - J(E \ W)) / |W & E| (Inner), W the digitized disk at the probe
/// center. Areas are in world units.
std::vector<CurvatureSample> estimate_curvature(const PerimeterModel& J, const CellSet& e,
                                                const CurvatureProbe& probe, ProbeSide side);

struct CurvatureEnvelope {
  double cbar = 0.0;
  double cunder = 0.0;
};

/// Continuum curvature of a ball of radius rho (world units) for the
/// perimeter family of J. For LocalCrofton both values are 1/rho. For the
/// fractional kernel, radial quadrature of the truncated kernel.
CurvatureEnvelope ball_curvature_envelope(const PerimeterModel& J, double rho);

void write_weights_csv(std::ostream& os, const PerimeterModel& J);

}  // namespace mmflow
