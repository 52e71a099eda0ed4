#include "mmflow/oracles.hpp"

#include "mmflow/distance.hpp"

#include <algorithm>
#include <numbers>

namespace mmflow {

namespace {

// Fixed-step RK4; returns 0 as soon as a stage leaves r > 0.
double rk4_fixed(const std::function<double(double, double)>& rhs, double r0, double t, long n) {
  const double dt = t / n;
  double r = r0;
  for (long k = 0; k < n; ++k) {
    const double tk = k * dt;
    const double k1 = rhs(tk, r);
    const double r2 = r + 0.5 * dt * k1;
    if (!(r2 > 0)) return 0.0;
    const double k2 = rhs(tk + 0.5 * dt, r2);
    const double r3 = r + 0.5 * dt * k2;
    if (!(r3 > 0)) return 0.0;
    const double k3 = rhs(tk + 0.5 * dt, r3);
    const double r4 = r + dt * k3;
    if (!(r4 > 0)) return 0.0;
    const double k4 = rhs(tk + dt, r4);
    r += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    if (!(r > 0)) return 0.0;
  }
  return r;
}

}  // namespace

double integrate_radius(const std::function<double(double, double)>& rhs, double r0, double t,
                        double tol) {
  if (!(r0 > 0)) throw Error("ball radius: r0 must be positive");
  if (t < 0) throw Error("ball radius: t must be nonnegative");
  if (t == 0) return r0;
  long n = 16;
  double prev = rk4_fixed(rhs, r0, t, n);
  // Near extinction the right-hand side is singular and convergence stalls;
  // the cap keeps the cost bounded there.
  for (n *= 2; n <= (1L << 22); n *= 2) {
    const double cur = rk4_fixed(rhs, r0, t, n);
    if (std::abs(cur - prev) <= tol) return cur;
    prev = cur;
  }
  return prev;
}

double exact_ball_radius(const Nonlinearity& G, const Forcing& f, double r0, double t) {
  if (!(r0 > 0)) throw Error("ball radius: r0 must be positive");
  if (t < 0) throw Error("ball radius: t must be nonnegative");
  if (f.kind == Forcing::Kind::Zero) {
    if (G.kind == Nonlinearity::Kind::Identity) return std::sqrt(std::max(r0 * r0 - 2.0 * t, 0.0));
    if (G.kind == Nonlinearity::Kind::Power) {
      const double e = 1.0 + G.param;
      return std::pow(std::max(std::pow(r0, e) - e * t, 0.0), 1.0 / e);
    }
  }
  return integrate_radius([&](double s, double r) { return G_eval(G, -1.0 / r + f.at(s)); }, r0,
                          t);
}

double kappa_hat(double r, const StepContext& ctx) {
  if (!(r > 0)) throw Error("kappa_hat: r must be positive");
  const double cbar = ball_curvature_envelope(ctx.J, r).cbar;
  return std::min(-1.0, G_eval(ctx.G, -cbar - ctx.f.bound()) / ctx.psi.c_psi());
}

double barrier_radius(double r0, double t, const StepContext& ctx) {
  if (!(r0 > 0)) throw Error("barrier radius: r0 must be positive");
  const double a = ctx.G.a();
  if (std::isfinite(a)) return std::max(r0 - a * t, 0.0);
  return integrate_radius([&](double, double r) { return kappa_hat(r, ctx); }, r0, t);
}

double extinction_time(double r0, const StepContext& ctx) {
  // kappa_hat <= -1, so extinction happens by t = r0.
  double lo = 0.0, hi = r0;
  while (hi - lo > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    (barrier_radius(r0, mid, ctx) > 0 ? lo : hi) = mid;
  }
  return hi;
}

std::vector<FDState> fd_reference_evolve(const Grid& g, const Field& u0, const Nonlinearity& G,
                                         const Forcing& f, const std::vector<double>& times,
                                         int margin) {
  if (!std::is_sorted(times.begin(), times.end()) || (!times.empty() && times.front() < 0))
    throw Error("fd reference: times must be sorted and nonnegative");
  const double slope = G.max_slope();
  if (!std::isfinite(slope) || slope <= 0)
    throw Error("fd reference: G must be Lipschitz with positive slope");
  margin = std::max(margin, 1);

  const double dx = g.dx, eps = dx;
  const double dt_max = 0.2 * dx * dx / slope;
  Field u = u0, rate(g.nx, g.ny);
  std::vector<FDState> out;
  double t = 0.0;

  auto advance_to = [&](double target) {
    while (t < target) {
      const long n = std::max(1L, static_cast<long>(std::ceil((target - t) / dt_max - 1e-12)));
      double dt = (target - t) / n;
      if (dt < 1e-12) throw Error("fd reference: time step underflow");
      dt = std::min(dt, dt_max);
      const double ft = f.at(t);
      rate.setZero();
      for (int j = margin; j < g.ny - margin; ++j)
        for (int i = margin; i < g.nx - margin; ++i) {
          const double ux = (u(i + 1, j) - u(i - 1, j)) / (2 * dx);
          const double uy = (u(i, j + 1) - u(i, j - 1)) / (2 * dx);
          const double uxx = (u(i + 1, j) - 2 * u(i, j) + u(i - 1, j)) / (dx * dx);
          const double uyy = (u(i, j + 1) - 2 * u(i, j) + u(i, j - 1)) / (dx * dx);
          const double uxy =
              (u(i + 1, j + 1) - u(i + 1, j - 1) - u(i - 1, j + 1) + u(i - 1, j - 1)) / (4 * dx * dx);
          const double g2 = ux * ux + uy * uy + eps * eps;
          const double num = uxx * (uy * uy + eps * eps) - 2 * ux * uy * uxy + uyy * (ux * ux + eps * eps);
          const double curv = num / (g2 * std::sqrt(g2));
          rate(i, j) = std::sqrt(g2) * G_eval(G, curv + ft);
        }
      u += dt * rate;
      t += dt;
      if (target - t < 1e-14 * std::max(1.0, target)) t = target;
    }
  };

  for (double target : times) {
    advance_to(target);
    out.push_back({g, u, eps, target});
  }
  return out;
}

RadiusMeasure measure_radius(const CellSet& e) {
  if (e.empty()) throw Error("measure radius: empty set");
  const Grid& g = e.grid;
  RadiusMeasure m;
  m.radius = std::sqrt(e.count() * g.dx * g.dx / std::numbers::pi);
  Vec2 c = Vec2::Zero();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (e(i, j)) c += g.center(i, j);
  m.centroid = c / static_cast<double>(e.count());

  const CellSet b = inner_boundary(e);
  double lo = kInf, hi = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (b(i, j)) {
        const double d = (g.center(i, j) - m.centroid).norm();
        lo = std::min(lo, d);
        hi = std::max(hi, d);
      }
  m.anisometry = lo > 0 ? hi / lo : kInf;
  return m;
}

double boundary_hausdorff(const CellSet& a, const CellSet& b) {
  if (a.empty() || b.empty()) return (a.empty() && b.empty()) ? 0.0 : kInf;
  const CellSet ba = inner_boundary(a), bb = inner_boundary(b);
  const Field da = distance_to(ba, Anisotropy::euclidean());
  const Field db = distance_to(bb, Anisotropy::euclidean());
  return std::max(bb.mask.select(da, 0.0).maxCoeff(), ba.mask.select(db, 0.0).maxCoeff());
}

}  // namespace mmflow
