#include "mmflow/core.hpp"

#include <algorithm>
#include <sstream>

namespace mmflow {

Grid::Grid(int nx_, int ny_, double dx_, const Vec2& origin_)
    : nx(nx_), ny(ny_), dx(dx_), origin(origin_) {
  if (nx < 4 || ny < 4) throw Error("grid: nx and ny must be >= 4");
  if (!(dx > 0) || !std::isfinite(dx)) throw Error("grid: dx must be positive");
}

CellSet::CellSet(const Grid& g, Mask m) : grid(g), mask(std::move(m)) {
  if (mask.rows() != g.nx || mask.cols() != g.ny)
    throw Error("cellset: mask shape does not match grid");
}

namespace {
void require_same_grid(const CellSet& a, const CellSet& b) {
  if (!(a.grid == b.grid)) throw Error("cellset: operands live on different grids");
}
}  // namespace

CellSet operator&(const CellSet& a, const CellSet& b) {
  require_same_grid(a, b);
  return CellSet(a.grid, a.mask && b.mask);
}

CellSet operator|(const CellSet& a, const CellSet& b) {
  require_same_grid(a, b);
  return CellSet(a.grid, a.mask || b.mask);
}

CellSet operator~(const CellSet& a) { return CellSet(a.grid, !a.mask); }

CellSet difference(const CellSet& a, const CellSet& b) {
  require_same_grid(a, b);
  return CellSet(a.grid, a.mask && !b.mask);
}

bool subset_of(const CellSet& a, const CellSet& b) {
  require_same_grid(a, b);
  return (a.mask <= b.mask).all();
}

CellSet shift(const CellSet& e, int di, int dj) {
  CellSet out(e.grid);
  const int nx = e.grid.nx, ny = e.grid.ny;
  for (int j = 0; j < ny; ++j) {
    const int tj = j + dj;
    if (tj < 0 || tj >= ny) continue;
    for (int i = 0; i < nx; ++i) {
      const int ti = i + di;
      if (ti >= 0 && ti < nx && e.mask(i, j)) out.mask(ti, tj) = true;
    }
  }
  return out;
}

CellSet margin_band(const Grid& g, int margin) {
  CellSet out(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) out.mask(i, j) = g.in_margin(i, j, margin);
  return out;
}

bool touches_margin(const CellSet& e, int margin) {
  return (e.mask && margin_band(e.grid, margin).mask).any();
}

CellSet inner_boundary(const CellSet& e) {
  CellSet out(e.grid);
  const int nx = e.grid.nx, ny = e.grid.ny;
  auto in = [&](int i, int j) { return e.grid.contains(i, j) && e.mask(i, j); };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      if (e.mask(i, j) && (!in(i - 1, j) || !in(i + 1, j) || !in(i, j - 1) || !in(i, j + 1)))
        out.mask(i, j) = true;
  return out;
}

CellSet make_disk(const Grid& g, const Vec2& c, double r) {
  CellSet out(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) out.mask(i, j) = (g.center(i, j) - c).norm() <= r;
  return out;
}

CellSet make_rectangle(const Grid& g, const Vec2& lo, const Vec2& hi) {
  CellSet out(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const Vec2 x = g.center(i, j);
      out.mask(i, j) = (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
    }
  return out;
}

LevelFunction::LevelFunction(const Grid& g, Field v, double floor_value, double ceil_value)
    : grid(g), values(std::move(v)), floorValue(floor_value), ceilValue(ceil_value) {
  if (values.rows() != g.nx || values.cols() != g.ny)
    throw Error("level function: values shape does not match grid");
  if (!(floorValue < ceilValue)) throw Error("level function: floor must be below ceil");
  if ((values < floorValue).any() || (values > ceilValue).any())
    throw Error("level function: values outside [floor, ceil]");
}

double outside_value(const LevelFunction& u, int margin) {
  const Grid& g = u.grid;
  const double v = u.values(0, 0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (g.in_margin(i, j, margin) && u.values(i, j) != v)
        throw Error("level function: not constant on the margin band");
  return v;
}

// ---------------------------------------------------------------------------

Anisotropy Anisotropy::weighted(double w0, double w1) {
  if (!(w0 > 0) || !(w1 > 0) || !std::isfinite(w0) || !std::isfinite(w1))
    throw Error("anisotropy: weights must be positive and finite");
  return {Kind::WeightedEuclidean, Vec2(w0, w1)};
}

double Anisotropy::c_psi() const {
  switch (kind) {
    case Kind::Euclidean:
      return 1.0;
    case Kind::MaxNorm:
      return std::sqrt(2.0);
    case Kind::WeightedEuclidean:
      return std::max({1.0, std::sqrt(weights.maxCoeff()), 1.0 / std::sqrt(weights.minCoeff())});
  }
  return 1.0;
}

// ---------------------------------------------------------------------------

Nonlinearity Nonlinearity::clamp(double m) {
  if (!(m > 0) || !std::isfinite(m)) throw Error("nonlinearity: clamp M must be positive");
  return {Kind::Clamp, m, {}};
}

Nonlinearity Nonlinearity::power(double gamma) {
  if (!(gamma > 0) || !std::isfinite(gamma))
    throw Error("nonlinearity: power gamma must be positive");
  return {Kind::Power, gamma, {}};
}

Nonlinearity Nonlinearity::piecewise(std::vector<Vec2> knots) {
  if (knots.size() < 2) throw Error("nonlinearity: table needs at least two knots");
  for (size_t k = 1; k < knots.size(); ++k) {
    if (!(knots[k](0) > knots[k - 1](0)))
      throw Error("nonlinearity: table abscissae must be strictly increasing");
    if (knots[k](1) < knots[k - 1](1))
      throw Error("nonlinearity: table values must be non-decreasing");
  }
  Nonlinearity n{Kind::PiecewiseMonotone, 0.0, std::move(knots)};
  if (std::abs(G_eval(n, 0.0)) > 1e-14) throw Error("nonlinearity: table must satisfy G(0) = 0");
  return n;
}

namespace {

double table_slope(const std::vector<Vec2>& t, size_t k) {
  return (t[k + 1](1) - t[k](1)) / (t[k + 1](0) - t[k](0));
}

double table_eval(const std::vector<Vec2>& t, double s) {
  if (s <= t.front()(0)) return t.front()(1) + table_slope(t, 0) * (s - t.front()(0));
  if (s >= t.back()(0)) return t.back()(1) + table_slope(t, t.size() - 2) * (s - t.back()(0));
  auto it = std::upper_bound(t.begin(), t.end(), s, [](double x, const Vec2& k) { return x < k(0); });
  const size_t k = static_cast<size_t>(it - t.begin()) - 1;
  return t[k](1) + table_slope(t, k) * (s - t[k](0));
}

// Smallest x with G(x) >= s (upper = false) or largest x with G(x) <= s
// (upper = true), assuming the answer is finite.
double bisect_preimage(const Nonlinearity& n, double s, bool upper) {
  auto pred = [&](double x) { return upper ? G_eval(n, x) <= s : G_eval(n, x) < s; };
  // pred is true on a left ray; find the boundary.
  double lo = -1.0, hi = 1.0;
  while (!pred(lo)) lo *= 2.0;
  while (pred(hi)) hi *= 2.0;
  for (int it = 0; it < 400 && hi - lo > 1e-12 * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (pred(mid) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double Nonlinearity::a() const {
  switch (kind) {
    case Kind::Identity:
      return kInf;
    case Kind::Clamp:
      return param;
    case Kind::Power:
      return kInf;
    case Kind::NegativePart:
      return kInf;
    case Kind::PiecewiseMonotone:
      return table_slope(table, 0) > 0 ? kInf : -table.front()(1);
  }
  return kInf;
}

double Nonlinearity::b() const {
  switch (kind) {
    case Kind::Identity:
      return kInf;
    case Kind::Clamp:
      return param;
    case Kind::Power:
      return kInf;
    case Kind::NegativePart:
      return 0.0;
    case Kind::PiecewiseMonotone:
      return table_slope(table, table.size() - 2) > 0 ? kInf : table.back()(1);
  }
  return kInf;
}

double Nonlinearity::max_slope() const {
  switch (kind) {
    case Kind::Identity:
    case Kind::Clamp:
    case Kind::NegativePart:
      return 1.0;
    case Kind::Power:
      return param == 1.0 ? 1.0 : kInf;
    case Kind::PiecewiseMonotone: {
      double m = 0.0;
      for (size_t k = 0; k + 1 < table.size(); ++k) m = std::max(m, table_slope(table, k));
      return m;
    }
  }
  return kInf;
}

double G_eval(const Nonlinearity& n, double s) {
  switch (n.kind) {
    case Nonlinearity::Kind::Identity:
      return s;
    case Nonlinearity::Kind::Clamp:
      return std::clamp(s, -n.param, n.param);
    case Nonlinearity::Kind::Power:
      return std::copysign(std::pow(std::abs(s), n.param), s);
    case Nonlinearity::Kind::NegativePart:
      return std::min(s, 0.0);
    case Nonlinearity::Kind::PiecewiseMonotone:
      return table_eval(n.table, s);
  }
  return s;
}

double g_eval(const Nonlinearity& n, double s) {
  if (s == 0.0) return 0.0;
  if (std::isnan(s)) return s;
  if (s <= -n.a()) return -kInf;
  if (s >= n.b()) return kInf;
  switch (n.kind) {
    case Nonlinearity::Kind::Identity:
    case Nonlinearity::Kind::Clamp:
    case Nonlinearity::Kind::NegativePart:
      return s;
    case Nonlinearity::Kind::Power:
      return std::copysign(std::pow(std::abs(s), 1.0 / n.param), s);
    case Nonlinearity::Kind::PiecewiseMonotone:
      return 0.5 * (bisect_preimage(n, s, false) + bisect_preimage(n, s, true));
  }
  return s;
}

// ---------------------------------------------------------------------------

Forcing Forcing::sampled(std::vector<double> times, std::vector<double> values) {
  if (times.empty() || times.size() != values.size())
    throw Error("forcing: times and values must be nonempty and of equal length");
  for (size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1])) throw Error("forcing: times must be strictly increasing");
  for (double v : values)
    if (!std::isfinite(v)) throw Error("forcing: values must be finite");
  return {Kind::SampledCurve, 0.0, std::move(times), std::move(values)};
}

double Forcing::at(double t) const {
  switch (kind) {
    case Kind::Zero:
      return 0.0;
    case Kind::Constant:
      return value;
    case Kind::SampledCurve: {
      if (t <= times.front()) return values.front();
      if (t >= times.back()) return values.back();
      const size_t k = static_cast<size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin()) - 1;
      const double lam = (t - times[k]) / (times[k + 1] - times[k]);
      return (1 - lam) * values[k] + lam * values[k + 1];
    }
  }
  return 0.0;
}

double Forcing::bound() const {
  switch (kind) {
    case Kind::Zero:
      return 0.0;
    case Kind::Constant:
      return std::abs(value);
    case Kind::SampledCurve:
      return Eigen::Map<const Eigen::ArrayXd>(values.data(), values.size()).abs().maxCoeff();
  }
  return 0.0;
}

double forcing_step_average(const Forcing& f, long k, double h) {
  if (k < 0 || !(h > 0)) throw Error("forcing: need k >= 0 and h > 0");
  if (f.kind != Forcing::Kind::SampledCurve) return f.at(0.0);

  const double t0 = static_cast<double>(k) * h, t1 = static_cast<double>(k + 1) * h;
  // Break points: interval ends plus every sample time inside. Trapezoid on
  // these is exact for a piecewise-linear curve; the refinement loop below
  // only guards against roundoff.
  std::vector<double> pts{t0};
  for (double s : f.times)
    if (s > t0 && s < t1) pts.push_back(s);
  pts.push_back(t1);

  auto trapezoid = [&](int sub) {
    double acc = 0.0;
    for (size_t p = 0; p + 1 < pts.size(); ++p) {
      const double a = pts[p], b = pts[p + 1], w = (b - a) / sub;
      for (int q = 0; q < sub; ++q) acc += 0.5 * w * (f.at(a + q * w) + f.at(a + (q + 1) * w));
    }
    return acc / h;
  };
  const double tol = 1e-10 * std::max(f.bound(), 1e-300);
  double prev = trapezoid(1);
  for (int sub = 2; sub <= 1024; sub *= 2) {
    const double cur = trapezoid(sub);
    if (std::abs(cur - prev) < tol) return cur;
    prev = cur;
  }
  return prev;
}

// ---------------------------------------------------------------------------

void SchemeParams::validate(const Grid& g, const Nonlinearity& n) const {
  if (!(h > 0) || !std::isfinite(h)) throw Error("scheme.h: must be positive");
  if (!(T >= h)) throw Error("scheme.T: must be at least scheme.h");
  if (levelCount < 2) throw Error("scheme.levelCount: must be >= 2");
  if (margin < 2) throw Error("grid.margin: must be >= 2");
  if (2 * margin >= std::min(g.nx, g.ny)) throw Error("grid.margin: leaves no interior");
  const double b = n.b();
  if (std::isfinite(b) && !(margin * g.dx > b * h)) {
    std::ostringstream os;
    os << "grid.margin: margin*dx = " << margin * g.dx << " does not exceed the per-step growth "
       << b * h;
    throw Error(os.str());
  }
}

}  // namespace mmflow
