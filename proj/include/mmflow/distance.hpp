#pragma once

// Anisotropic (signed) distances between cell centers.

#include "mmflow/core.hpp"

#include <iosfwd>

namespace mmflow {

struct DistanceField {
  Grid grid;
  Field values;
};

/// min over cells y of `s` of psi_polar(x - y), for every cell x. Zero on `s`,
/// +inf everywhere when `s` is empty. World units.
Field distance_to(const CellSet& s, const Anisotropy& a);

/// dist(x, E) outside E and -dist(x, E^c) on E. Exact for all three
/// anisotropy kinds (separable transforms).
DistanceField signed_distance(const CellSet& e, const Anisotropy& a);

/// Same quantity by direct minimization over all cell pairs; grids up to 64x64.
DistanceField signed_distance_bruteforce(const CellSet& e, const Anisotropy& a);

/// {cells : d <= delta}; delta = -inf gives the empty set, +inf the full grid.
CellSet level_band(const DistanceField& d, double delta);

void write_distance_csv(std::ostream& os, const DistanceField& d);

}  // namespace mmflow
