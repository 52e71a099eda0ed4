#pragma once

// Domain types shared by every module: grids, cell sets, scalar fields,
// anisotropies, nonlinearities and forcing terms.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmflow {

using Vec2 = Eigen::Vector2d;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using Field = Eigen::ArrayXXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A finite 2D lattice of square cells. Cell (i, j) has its center at
/// origin + dx * (i, j).
struct Grid {
  int nx = 0;
  int ny = 0;
  double dx = 1.0;
  Vec2 origin = Vec2::Zero();

  Grid() = default;
  Grid(int nx, int ny, double dx, const Vec2& origin = Vec2::Zero());

  Vec2 center(int i, int j) const { return origin + dx * Vec2(i, j); }
  bool contains(int i, int j) const { return i >= 0 && j >= 0 && i < nx && j < ny; }
  long cells() const { return static_cast<long>(nx) * ny; }
  /// True when (i, j) lies within `margin` cells of the outer edge.
  bool in_margin(int i, int j, int margin) const {
    return i < margin || j < margin || i >= nx - margin || j >= ny - margin;
  }

  bool operator==(const Grid& o) const {
    return nx == o.nx && ny == o.ny && dx == o.dx && origin == o.origin;
  }
};

/// A subset of the cells of a grid.
struct CellSet {
  Grid grid;
  Mask mask;

  CellSet() = default;
  explicit CellSet(const Grid& g, bool value = false)
      : grid(g), mask(Mask::Constant(g.nx, g.ny, value)) {}
  CellSet(const Grid& g, Mask m);

  bool operator()(int i, int j) const { return mask(i, j); }
  auto operator()(int i, int j) { return mask(i, j); }

  long count() const { return mask.count(); }
  bool empty() const { return !mask.any(); }
  bool full() const { return mask.all(); }

  bool operator==(const CellSet& o) const {
    return grid == o.grid && (mask == o.mask).all();
  }
};

CellSet operator&(const CellSet& a, const CellSet& b);
CellSet operator|(const CellSet& a, const CellSet& b);
CellSet operator~(const CellSet& a);
CellSet difference(const CellSet& a, const CellSet& b);
bool subset_of(const CellSet& a, const CellSet& b);
/// Lattice translation by (di, dj); cells leaving the grid are dropped.
CellSet shift(const CellSet& e, int di, int dj);
/// Cells within `margin` cells of the grid edge.
CellSet margin_band(const Grid& g, int margin);
bool touches_margin(const CellSet& e, int margin);
/// Cells of `e` with a 4-neighbour outside `e` (grid edge counts as outside).
CellSet inner_boundary(const CellSet& e);

/// Digitized disk: cells whose centers satisfy |x - c| <= r (world units).
CellSet make_disk(const Grid& g, const Vec2& c, double r);
/// Cells whose centers lie in [lo, hi] componentwise (world units).
CellSet make_rectangle(const Grid& g, const Vec2& lo, const Vec2& hi);

enum class Phase { BoundedSet, BoundedComplement };

/// A set together with its phase. BoundedComplement sets are stored through
/// their (bounded) complement.
struct PhaseSet {
  Phase phase = Phase::BoundedSet;
  CellSet stored;

  /// The actual set on the grid.
  CellSet cells() const { return phase == Phase::BoundedSet ? stored : ~stored; }

  static PhaseSet bounded(CellSet e) { return {Phase::BoundedSet, std::move(e)}; }
  static PhaseSet from_complement(CellSet k) {
    return {Phase::BoundedComplement, std::move(k)};
  }
};

/// Grid scalar field. Values lie in [floorValue, ceilValue] and are constant
/// on the margin band.
struct LevelFunction {
  Grid grid;
  Field values;
  double floorValue = 0.0;
  double ceilValue = 1.0;

  LevelFunction() = default;
  LevelFunction(const Grid& g, Field v, double floor_value, double ceil_value);

  double operator()(int i, int j) const { return values(i, j); }
};

/// The constant value of u on the margin band; throws if u is not constant there.
double outside_value(const LevelFunction& u, int margin);

// ---------------------------------------------------------------------------
// Anisotropy

struct Anisotropy {
  enum class Kind { Euclidean, MaxNorm, WeightedEuclidean };

  Kind kind = Kind::Euclidean;
  /// Diagonal weights for WeightedEuclidean: psi(p)^2 = w0 p0^2 + w1 p1^2.
  Vec2 weights = Vec2::Ones();

  static Anisotropy euclidean() { return {}; }
  static Anisotropy max_norm() { return {Kind::MaxNorm, Vec2::Ones()}; }
  static Anisotropy weighted(double w0, double w1);

  /// Tightest constant with |p|/c <= psi(p) <= c|p|.
  double c_psi() const;
  bool isotropic() const { return kind == Kind::Euclidean; }
};

template <typename Derived>
typename Derived::Scalar psi_eval(const Anisotropy& a, const Eigen::MatrixBase<Derived>& p) {
  switch (a.kind) {
    case Anisotropy::Kind::Euclidean:
      return p.norm();
    case Anisotropy::Kind::MaxNorm:
      return p.template lpNorm<Eigen::Infinity>();
    case Anisotropy::Kind::WeightedEuclidean:
      return std::sqrt(a.weights(0) * p(0) * p(0) + a.weights(1) * p(1) * p(1));
  }
  return 0;
}

/// Polar (dual) norm: sup { xi . v : psi(xi) <= 1 }.
template <typename Derived>
typename Derived::Scalar psi_polar(const Anisotropy& a, const Eigen::MatrixBase<Derived>& v) {
  switch (a.kind) {
    case Anisotropy::Kind::Euclidean:
      return v.norm();
    case Anisotropy::Kind::MaxNorm:
      return v.template lpNorm<1>();
    case Anisotropy::Kind::WeightedEuclidean:
      return std::sqrt(v(0) * v(0) / a.weights(0) + v(1) * v(1) / a.weights(1));
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Nonlinearity G and its inverse selection g

struct Nonlinearity {
  enum class Kind { Identity, Clamp, Power, NegativePart, PiecewiseMonotone };

  Kind kind = Kind::Identity;
  /// M for Clamp, gamma for Power.
  double param = 0.0;
  /// Knots (x, G(x)) for PiecewiseMonotone, strictly increasing in x and
  /// non-decreasing in G. Beyond the end knots G continues with the slope of
  /// the end segment, so a flat end segment saturates.
  std::vector<Vec2> table;

  static Nonlinearity identity() { return {}; }
  static Nonlinearity clamp(double m);
  static Nonlinearity power(double gamma);
  static Nonlinearity negative_part() { return {Kind::NegativePart, 0.0, {}}; }
  static Nonlinearity piecewise(std::vector<Vec2> knots);

  /// a = -lim_{s->-inf} G(s), in [0, +inf].
  double a() const;
  /// b = lim_{s->+inf} G(s), in [0, +inf].
  double b() const;
  /// Supremum of the slope of G, +inf when unbounded (Power with gamma < 1).
  double max_slope() const;
};

double G_eval(const Nonlinearity& n, double s);

/// Inverse selection g of G: G(g(s)) = s on (-a, b), g(0) = 0, -inf for
/// s <= -a and +inf for s >= b. On plateaus of G the midpoint of the
/// preimage interval is chosen.
double g_eval(const Nonlinearity& n, double s);

// ---------------------------------------------------------------------------
// Forcing

struct Forcing {
  enum class Kind { Zero, Constant, SampledCurve };

  Kind kind = Kind::Zero;
  double value = 0.0;
  /// Piecewise-linear samples for SampledCurve, held constant outside.
  std::vector<double> times;
  std::vector<double> values;

  static Forcing zero() { return {}; }
  static Forcing constant(double c) { return {Kind::Constant, c, {}, {}}; }
  static Forcing sampled(std::vector<double> times, std::vector<double> values);

  double at(double t) const;
  /// sup |f|.
  double bound() const;
};

/// Step-averaged forcing (1/h) * integral of f over [kh, (k+1)h].
double forcing_step_average(const Forcing& f, long k, double h);

// ---------------------------------------------------------------------------
// Scheme parameters

enum class MinimizerChoice { Minimal, Maximal };

struct SchemeParams {
  double h = 1e-3;
  double T = 1e-3;
  int levelCount = 64;
  int margin = 8;
  MinimizerChoice minimizerChoice = MinimizerChoice::Minimal;

  /// Throws Error naming the violated constraint.
  void validate(const Grid& g, const Nonlinearity& n) const;
  long steps() const { return std::lround(T / h); }
};

}  // namespace mmflow
