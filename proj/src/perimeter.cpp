#include "mmflow/perimeter.hpp"

#include <algorithm>
#include <cstdio>
#include <numbers>
#include <ostream>

namespace mmflow {

namespace {

using OffsetClass = std::vector<Eigen::Vector2i>;

// Undirected representatives, grouped into symmetry classes.
std::vector<OffsetClass> crofton_classes(int neighborhood) {
  std::vector<OffsetClass> classes{{{1, 0}, {0, 1}}, {{1, 1}, {1, -1}}};
  if (neighborhood == 16) classes.push_back({{1, 2}, {2, 1}, {1, -2}, {2, -1}});
  return classes;
}

double class_length(const OffsetClass& c, const Vec2& n) {
  double acc = 0.0;
  for (const auto& o : c) acc += std::abs(o.cast<double>().dot(n));
  return acc;
}

// Weights that make the directional length exact for axis-parallel and
// diagonal interfaces; with 16 neighbours the third class makes it exact on
// average over all directions as well.
std::vector<double> crofton_class_weights(int neighborhood) {
  const auto classes = crofton_classes(neighborhood);
  const int m = static_cast<int>(classes.size());
  const Vec2 normals[2] = {Vec2(1, 0), Vec2(1, 1).normalized()};

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  for (int d = 0; d < 2; ++d)
    for (int c = 0; c < m; ++c) a(d, c) = class_length(classes[c], normals[d]);
  if (m == 3) {
    const int samples = 20000;
    for (int k = 0; k < samples; ++k) {
      const double th = (k + 0.5) * (std::numbers::pi / 2) / samples;
      const Vec2 n(std::cos(th), std::sin(th));
      for (int c = 0; c < m; ++c) a(2, c) += class_length(classes[c], n) / samples;
    }
  }
  const Eigen::VectorXd w = a.partialPivLu().solve(Eigen::VectorXd::Ones(m));
  return {w.data(), w.data() + m};
}

template <typename F>
double simpson_step(F& f, double a, double b, double fa, double fm, double fb, double whole,
                    double tol, int depth) {
  const double m = 0.5 * (a + b), lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <typename F>
double adaptive_simpson(F&& f, double a, double b, double rel_tol) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4 * fm + fb);
  const double tol = rel_tol * std::max(std::abs(whole), 1e-300);
  return simpson_step(f, a, b, fa, fm, fb, whole, tol, 50);
}

}  // namespace

PerimeterModel PerimeterModel::local_crofton(int neighborhood) {
  if (neighborhood != 8 && neighborhood != 16)
    throw Error("perimeter.neighborhood: must be 8 or 16");
  PerimeterModel j;
  j.kind = Kind::LocalCrofton;
  j.neighborhood = neighborhood;
  const auto classes = crofton_classes(neighborhood);
  const auto w = crofton_class_weights(neighborhood);
  for (size_t c = 0; c < classes.size(); ++c)
    for (const auto& o : classes[c]) {
      j.weights.push_back({o(0), o(1), w[c]});
      j.weights.push_back({-o(0), -o(1), w[c]});
    }
  return j;
}

PerimeterModel PerimeterModel::fractional(double s, int cutoff, double dx) {
  if (!(s > 0 && s < 1)) throw Error("perimeter.s: must lie in (0, 1)");
  if (cutoff < 1) throw Error("perimeter.cutoff: must be >= 1");
  if (!(dx > 0)) throw Error("perimeter: dx must be positive");
  PerimeterModel j;
  j.kind = Kind::FractionalKernel;
  j.s = s;
  j.cutoffRadius = cutoff;
  j.dx = dx;
  // Pair energy dx^4 / |o dx|^(2+s) = (w dx) with w = dx^(1-s) / |o|^(2+s).
  const double scale = std::pow(dx, 1.0 - s);
  for (int dj = -cutoff; dj <= cutoff; ++dj)
    for (int di = -cutoff; di <= cutoff; ++di) {
      const int r2 = di * di + dj * dj;
      if (r2 == 0 || r2 > cutoff * cutoff) continue;
      j.weights.push_back({di, dj, scale * std::pow(static_cast<double>(r2), -(2.0 + s) / 2.0)});
    }
  return j;
}

int PerimeterModel::reach() const {
  int r = 0;
  for (const auto& o : weights) r = std::max({r, std::abs(o.di), std::abs(o.dj)});
  return r;
}

double crofton_directional_length(const PerimeterModel& J, const Vec2& n) {
  double acc = 0.0;
  for (const auto& o : J.weights) acc += o.weight * std::abs(o.di * n(0) + o.dj * n(1));
  return 0.5 * acc;
}

std::vector<long> cut_counts(const PerimeterModel& J, const CellSet& e) {
  const int nx = e.grid.nx, ny = e.grid.ny;
  std::vector<long> out;
  out.reserve(J.weights.size());
  for (const auto& o : J.weights) {
    const int w = nx - std::abs(o.di), h = ny - std::abs(o.dj);
    if (w <= 0 || h <= 0) {
      out.push_back(0);
      continue;
    }
    // Cells i with i and i+o both in the grid.
    const int i0 = std::max(0, -o.di), j0 = std::max(0, -o.dj);
    const auto src = e.mask.block(i0, j0, w, h);
    const auto dst = e.mask.block(i0 + o.di, j0 + o.dj, w, h);
    out.push_back((src && !dst).count());
  }
  return out;
}

double perimeter_energy(const PerimeterModel& J, const CellSet& e) {
  if (J.dx > 0 && J.dx != e.grid.dx)
    throw Error("perimeter: model was built for a different dx");
  const auto counts = cut_counts(J, e);
  double acc = 0.0;
  for (size_t k = 0; k < counts.size(); ++k) acc += J.weights[k].weight * counts[k];
  return acc * e.grid.dx;
}

bool submodularity_check(const PerimeterModel& J, const CellSet& e, const CellSet& f) {
  return perimeter_energy(J, e & f) + perimeter_energy(J, e | f) <=
         perimeter_energy(J, e) + perimeter_energy(J, f) + 1e-9;
}

double coarea_energy(const PerimeterModel& J, const LevelFunction& u,
                     const std::vector<double>& levels) {
  if (!std::is_sorted(levels.begin(), levels.end()))
    throw Error("coarea: levels must be sorted");
  double acc = 0.0;
  for (size_t k = 1; k < levels.size(); ++k) {
    const double gap = levels[k] - levels[k - 1];
    if (gap == 0.0) continue;
    acc += gap * perimeter_energy(J, CellSet(u.grid, u.values >= levels[k]));
  }
  return acc;
}

std::vector<CurvatureSample> estimate_curvature(const PerimeterModel& J, const CellSet& e,
                                                const CurvatureProbe& probe, ProbeSide side) {
  const Grid& g = e.grid;
  if (!g.contains(probe.ci, probe.cj)) throw Error("curvature probe: center outside the grid");
  for (size_t k = 0; k < probe.radii.size(); ++k) {
    if (probe.radii[k] < 1.0) throw Error("curvature probe: radii must be >= 1");
    if (k > 0 && !(probe.radii[k] > probe.radii[k - 1]))
      throw Error("curvature probe: radii must be strictly increasing");
  }

  const double base = perimeter_energy(J, e);
  const double area = g.dx * g.dx;
  std::vector<CurvatureSample> out;
  for (double rho : probe.radii) {
    const CellSet w = make_disk(g, g.center(probe.ci, probe.cj), rho * g.dx);
    CurvatureSample smp{rho, 0.0, false};
    if (side == ProbeSide::Outer) {
      const long n = difference(w, e).count();
      if (n == 0)
        smp.skipped = true;
      else
        smp.value = (perimeter_energy(J, e | w) - base) / (n * area);
    } else {
      const long n = (w & e).count();
      if (n == 0)
        smp.skipped = true;
      else
        smp.value = (base - perimeter_energy(J, difference(e, w))) / (n * area);
    }
    out.push_back(smp);
  }
  return out;
}

CurvatureEnvelope ball_curvature_envelope(const PerimeterModel& J, double rho) {
  if (!(rho > 0)) throw Error("ball curvature: rho must be positive");
  if (J.kind == PerimeterModel::Kind::LocalCrofton) return {1.0 / rho, 1.0 / rho};

  // At a boundary point of B_rho, the circle of radius r meets the ball in an
  // arc of angle 2 acos(r / 2 rho). The curvature is the kernel integral of
  // (outside arc - inside arc).
  const double s = J.s;
  const double rc = J.cutoffRadius * J.dx;
  const double split = std::min(2.0 * rho, rc);
  // r = u^p with p = 1 / (1 - s) removes the r^-s singularity at 0.
  const double p = 1.0 / (1.0 - s);
  auto integrand = [&](double u) {
    if (u <= 0.0) return 2.0 * p / rho;
    const double r = std::pow(u, p);
    // 2 pi - 4 acos(x) = 4 asin(x)
    const double arc = 4.0 * std::asin(std::min(r / (2.0 * rho), 1.0));
    return arc * std::pow(r, -1.0 - s) * p * std::pow(u, p - 1.0);
  };
  double value = adaptive_simpson(integrand, 0.0, std::pow(split, 1.0 - s), 1e-12);
  if (rc > split)
    value += 2.0 * std::numbers::pi * (std::pow(split, -s) - std::pow(rc, -s)) / s;
  return {value, value};
}

void write_weights_csv(std::ostream& os, const PerimeterModel& J) {
  os << "offset_x,offset_y,weight\n";
  char buf[64];
  for (const auto& o : J.weights) {
    std::snprintf(buf, sizeof buf, "%.17g", o.weight);
    os << o.di << ',' << o.dj << ',' << buf << '\n';
  }
}

}  // namespace mmflow
