#include "mmflow/distance.hpp"

#include <cstdio>
#include <ostream>
#include <vector>

namespace mmflow {

namespace {

// Lower envelope of parabolas: out[x] = min_q f[q] + c (x - q)^2 over the
// finite entries of f (Felzenszwalb & Huttenlocher).
void envelope_1d(const std::vector<double>& f, double c, std::vector<double>& out,
                 std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  out.assign(n, kInf);
  v.clear();
  z.clear();
  auto cross = [&](int p, int q) {
    return ((f[q] + c * q * q) - (f[p] + c * p * p)) / (2.0 * c * (q - p));
  };
  for (int q = 0; q < n; ++q) {
    if (!std::isfinite(f[q])) continue;
    while (!v.empty()) {
      const double s = cross(v.back(), q);
      if (v.size() > 1 && s <= z.back()) {
        v.pop_back();
        z.pop_back();
        continue;
      }
      z.push_back(s);
      break;
    }
    if (v.empty()) z.assign(1, -kInf);
    v.push_back(q);
  }
  if (v.empty()) return;
  // z[k] is the left end of the interval where parabola v[k] is lowest.
  size_t k = 0;
  for (int x = 0; x < n; ++x) {
    while (k + 1 < v.size() && z[k + 1] < x) ++k;
    const double d = x - v[k];
    out[x] = f[v[k]] + c * d * d;
  }
}

// Squared separable distance with per-axis coefficients, in cell units.
Field squared_distance(const Mask& m, double c0, double c1) {
  const int nx = static_cast<int>(m.rows()), ny = static_cast<int>(m.cols());
  Field d1(nx, ny), d(nx, ny);
  std::vector<double> f, out, z;
  std::vector<int> v;
  for (int j = 0; j < ny; ++j) {
    f.assign(nx, kInf);
    for (int i = 0; i < nx; ++i)
      if (m(i, j)) f[i] = 0.0;
    envelope_1d(f, c0, out, v, z);
    for (int i = 0; i < nx; ++i) d1(i, j) = out[i];
  }
  for (int i = 0; i < nx; ++i) {
    f.resize(ny);
    for (int j = 0; j < ny; ++j) f[j] = d1(i, j);
    envelope_1d(f, c1, out, v, z);
    for (int j = 0; j < ny; ++j) d(i, j) = out[j];
  }
  return d;
}

// City-block distance by two raster sweeps, in cell units.
Field l1_distance(const Mask& m) {
  const int nx = static_cast<int>(m.rows()), ny = static_cast<int>(m.cols());
  Field d = Field::Constant(nx, ny, kInf);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      if (m(i, j)) {
        d(i, j) = 0;
        continue;
      }
      if (i > 0) d(i, j) = std::min(d(i, j), d(i - 1, j) + 1);
      if (j > 0) d(i, j) = std::min(d(i, j), d(i, j - 1) + 1);
    }
  for (int j = ny - 1; j >= 0; --j)
    for (int i = nx - 1; i >= 0; --i) {
      if (i + 1 < nx) d(i, j) = std::min(d(i, j), d(i + 1, j) + 1);
      if (j + 1 < ny) d(i, j) = std::min(d(i, j), d(i, j + 1) + 1);
    }
  return d;
}

void require_proper(const CellSet& e) {
  if (e.empty()) throw Error("signed distance: E is empty");
  if (e.full()) throw Error("signed distance: E is the full grid");
}

}  // namespace

Field distance_to(const CellSet& s, const Anisotropy& a) {
  const double dx = s.grid.dx;
  switch (a.kind) {
    case Anisotropy::Kind::Euclidean:
      return dx * squared_distance(s.mask, 1.0, 1.0).sqrt();
    case Anisotropy::Kind::MaxNorm:
      return dx * l1_distance(s.mask);
    case Anisotropy::Kind::WeightedEuclidean:
      return dx * squared_distance(s.mask, 1.0 / a.weights(0), 1.0 / a.weights(1)).sqrt();
  }
  return {};
}

DistanceField signed_distance(const CellSet& e, const Anisotropy& a) {
  require_proper(e);
  const Field out = distance_to(e, a);
  const Field in = distance_to(~e, a);
  return {e.grid, e.mask.select(-in, out)};
}

DistanceField signed_distance_bruteforce(const CellSet& e, const Anisotropy& a) {
  require_proper(e);
  const Grid& g = e.grid;
  if (g.nx > 64 || g.ny > 64) throw Error("brute-force distance: grid larger than 64x64");
  Field d = Field::Constant(g.nx, g.ny, kInf);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const bool inside = e(i, j);
      for (int q = 0; q < g.ny; ++q)
        for (int p = 0; p < g.nx; ++p) {
          if (e(p, q) == inside) continue;
          const Vec2 v = g.center(i, j) - g.center(p, q);
          d(i, j) = std::min(d(i, j), psi_polar(a, v));
        }
      if (inside) d(i, j) = -d(i, j);
    }
  return {g, d};
}

CellSet level_band(const DistanceField& d, double delta) {
  if (delta == -kInf) return CellSet(d.grid, false);
  if (delta == kInf) return CellSet(d.grid, true);
  return CellSet(d.grid, d.values <= delta);
}

void write_distance_csv(std::ostream& os, const DistanceField& d) {
  char buf[64];
  for (int j = 0; j < d.grid.ny; ++j) {
    for (int i = 0; i < d.grid.nx; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", d.values(i, j));
      os << (i ? "," : "") << buf;
    }
    os << '\n';
  }
}

}  // namespace mmflow
