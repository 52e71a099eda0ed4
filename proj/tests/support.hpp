#pragma once

#include "mmflow/core.hpp"

#include <random>

namespace mmflow::testing {

inline CellSet random_set(const Grid& g, std::mt19937_64& rng, double density, int margin = 0) {
  std::bernoulli_distribution coin(density);
  CellSet e(g);
  for (int j = margin; j < g.ny - margin; ++j)
    for (int i = margin; i < g.nx - margin; ++i) e.mask(i, j) = coin(rng);
  return e;
}

/// Union of a few random disks kept `margin` cells away from the edge.
inline CellSet random_blobs(const Grid& g, std::mt19937_64& rng, int count, double rmin,
                            double rmax, int margin) {
  CellSet e(g);
  std::uniform_real_distribution<double> rad(rmin, rmax);
  for (int b = 0; b < count; ++b) {
    const double r = rad(rng);
    const double lo_x = g.center(margin, 0)(0) + r, hi_x = g.center(g.nx - 1 - margin, 0)(0) - r;
    const double lo_y = g.center(0, margin)(1) + r, hi_y = g.center(0, g.ny - 1 - margin)(1) - r;
    std::uniform_real_distribution<double> ux(lo_x, hi_x), uy(lo_y, hi_y);
    e = e | make_disk(g, Vec2(ux(rng), uy(rng)), r);
  }
  return e;
}

}  // namespace mmflow::testing
