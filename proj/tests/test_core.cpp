#include "mmflow/core.hpp"

#include <doctest.h>

#include <numbers>
#include <random>

using namespace mmflow;

namespace {
const Anisotropy kKinds[] = {Anisotropy::euclidean(), Anisotropy::max_norm(),
                             Anisotropy::weighted(2.0, 0.5), Anisotropy::weighted(0.3, 1.7)};

// sup { xi . v : psi(xi) <= 1 } over a 3600-point sweep of the unit sphere of psi.
double polar_by_sweep(const Anisotropy& a, const Vec2& v) {
  double best = -kInf;
  for (int k = 0; k < 3600; ++k) {
    const double th = 2 * std::numbers::pi * k / 3600;
    const Vec2 dir(std::cos(th), std::sin(th));
    const Vec2 xi = dir / psi_eval(a, dir);
    best = std::max(best, xi.dot(v));
  }
  return best;
}
}  // namespace

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(Grid(3, 8, 1.0), Error);
  CHECK_THROWS_AS(Grid(8, 8, 0.0), Error);
  const Grid g(8, 6, 0.5, Vec2(1, 2));
  CHECK(g.center(2, 3).isApprox(Vec2(2, 3.5)));
  CHECK(g.in_margin(1, 3, 2));
  CHECK_FALSE(g.in_margin(2, 3, 2));
}

TEST_CASE("psi examples") {
  CHECK(psi_eval(Anisotropy::euclidean(), Vec2(3, 4)) == 5);
  CHECK(psi_eval(Anisotropy::max_norm(), Vec2(3, 4)) == 4);
  CHECK(psi_polar(Anisotropy::euclidean(), Vec2(3, 4)) == 5);
  CHECK(psi_polar(Anisotropy::max_norm(), Vec2(3, 4)) == 7);
  for (const auto& a : kKinds) CHECK(psi_eval(a, Vec2(0, 0)) == 0);
}

TEST_CASE("psi invariants on random vectors") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0, 3);
  for (const auto& a : kKinds) {
    const double c = a.c_psi();
    CHECK(c >= 1.0);
    for (int k = 0; k < 1000; ++k) {
      const Vec2 p(n(rng), n(rng));
      const double v = psi_eval(a, p);
      CHECK(psi_eval(a, Vec2(-p)) == v);
      CHECK(psi_eval(a, Vec2(2 * p)) == doctest::Approx(2 * v).epsilon(1e-12));
      CHECK(v >= p.norm() / c * (1 - 1e-12));
      CHECK(v <= p.norm() * c * (1 + 1e-12));
    }
  }
}

TEST_CASE("polar duality and the weighted closed form") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0, 2);
  for (const auto& a : kKinds)
    for (int k = 0; k < 1000; ++k) {
      const Vec2 v(n(rng), n(rng)), xi(n(rng), n(rng));
      CHECK(psi_eval(a, v) * psi_polar(a, xi) >= v.dot(xi) - 1e-12);
    }
  for (int k = 0; k < 1000; ++k) {
    const Vec2 v(n(rng), n(rng));
    CHECK(psi_polar(Anisotropy::euclidean(), v) ==
          doctest::Approx(psi_eval(Anisotropy::euclidean(), v)).epsilon(1e-12));
  }
  for (const auto& a : kKinds)
    for (int k = 0; k < 20; ++k) {
      const Vec2 v(n(rng), n(rng));
      // The sweep undershoots the supremum by O(step^2).
      CHECK(polar_by_sweep(a, v) == doctest::Approx(psi_polar(a, v)).epsilon(1e-5));
    }
}

TEST_CASE("tightest ellipticity constants") {
  CHECK(Anisotropy::max_norm().c_psi() == doctest::Approx(std::sqrt(2.0)));
  CHECK(Anisotropy::weighted(4.0, 1.0).c_psi() == doctest::Approx(2.0));
  CHECK(Anisotropy::weighted(0.25, 1.0).c_psi() == doctest::Approx(2.0));
}

TEST_CASE("g examples and saturation") {
  CHECK(g_eval(Nonlinearity::identity(), 1.5) == 1.5);
  CHECK(g_eval(Nonlinearity::clamp(2.0), 2.0) == kInf);
  CHECK(g_eval(Nonlinearity::clamp(2.0), -2.0) == -kInf);
  CHECK(g_eval(Nonlinearity::clamp(2.0), 1.0) == 1.0);
  CHECK(g_eval(Nonlinearity::power(3.0), 8.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(g_eval(Nonlinearity::power(1.0 / 3), 2.0) == doctest::Approx(8.0).epsilon(1e-13));

  const auto neg = Nonlinearity::negative_part();
  CHECK(neg.a() == kInf);
  CHECK(neg.b() == 0.0);
  CHECK(g_eval(neg, 0.0) == 0.0);
  CHECK(g_eval(neg, 1e-9) == kInf);
  CHECK(g_eval(neg, -0.5) == -0.5);
  CHECK(G_eval(neg, 3.0) == 0.0);
}

TEST_CASE("piecewise table: plateau midpoint and saturation") {
  // G = s on [-1, 1], flat at 1 on [1, 3], slope 1 again up to 4, then flat.
  const auto n = Nonlinearity::piecewise({{-2, -2}, {-1, -1}, {1, 1}, {3, 1}, {4, 2}, {5, 2}});
  CHECK(n.a() == kInf);
  CHECK(n.b() == 2.0);
  CHECK(g_eval(n, 1.0) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(g_eval(n, 1.5) == doctest::Approx(3.5).epsilon(1e-9));
  CHECK(g_eval(n, 2.0) == kInf);
  CHECK(g_eval(n, -10.0) == doctest::Approx(-10.0).epsilon(1e-9));
  CHECK_THROWS_AS(Nonlinearity::piecewise({{-1, -1}, {1, 0.5}, {0.5, 2}}), Error);
  CHECK_THROWS_AS(Nonlinearity::piecewise({{-1, 0}, {1, 1}}), Error);
}

TEST_CASE("g inverts G on (-a, b) and is increasing") {
  const Nonlinearity kinds[] = {
      Nonlinearity::identity(), Nonlinearity::clamp(2.0), Nonlinearity::power(3.0),
      Nonlinearity::power(1.0 / 3), Nonlinearity::negative_part(),
      Nonlinearity::piecewise({{-3, -1.5}, {-1, -1}, {0, 0}, {2, 0.5}, {3, 0.5}, {4, 3}})};
  std::mt19937_64 rng(13);
  for (const auto& n : kinds) {
    const double lo = std::max(-n.a(), -50.0), hi = std::min(n.b(), 50.0);
    if (!(hi > lo)) continue;
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> s(1000);
    for (auto& x : s) x = u(rng);
    std::sort(s.begin(), s.end());
    double prev = -kInf;
    for (double x : s) {
      if (x <= -n.a() || x >= n.b()) continue;
      const double y = g_eval(n, x);
      REQUIRE(std::isfinite(y));
      CHECK(std::abs(G_eval(n, y) - x) <= 1e-9);
      CHECK(y > prev);
      prev = y;
    }
  }
}

TEST_CASE("forcing step averages") {
  CHECK(forcing_step_average(Forcing::constant(0.7), 5, 0.01) == 0.7);
  CHECK(forcing_step_average(Forcing::zero(), 3, 0.2) == 0.0);
  const auto ramp = Forcing::sampled({0.0, 1.0}, {0.0, 1.0});
  CHECK(forcing_step_average(ramp, 0, 0.1) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(forcing_step_average(ramp, 3, 0.1) == doctest::Approx(0.35).epsilon(1e-12));
  // Kink inside the step: f = |t - 0.15| sampled at its corners.
  const auto tent = Forcing::sampled({0.0, 0.15, 1.0}, {0.15, 0.0, 0.85});
  CHECK(forcing_step_average(tent, 1, 0.1) == doctest::Approx((0.05 * 0.05 + 0.05 * 0.05) / 2 / 0.1).epsilon(1e-12));
  CHECK(ramp.bound() == 1.0);
  CHECK_THROWS_AS(Forcing::sampled({0.0, 0.0}, {1.0, 2.0}), Error);
  CHECK_THROWS_AS(forcing_step_average(ramp, -1, 0.1), Error);
}

TEST_CASE("scheme parameter validation names the key") {
  const Grid g(64, 64, 1.0 / 64);
  SchemeParams p;
  p.h = 0;
  try {
    p.validate(g, Nonlinearity::identity());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("scheme.h") != std::string::npos);
  }
  p.h = 1e-3;
  p.T = 1e-2;
  p.margin = 2;
  CHECK_THROWS_AS(p.validate(g, Nonlinearity::clamp(100.0)), Error);
  CHECK_NOTHROW(p.validate(g, Nonlinearity::clamp(2.0)));
}

TEST_CASE("set algebra") {
  const Grid g(8, 8, 1.0);
  CellSet a(g), b(g);
  a.mask(2, 2) = a.mask(3, 2) = true;
  b.mask(3, 2) = b.mask(5, 5) = true;
  CHECK((a & b).count() == 1);
  CHECK((a | b).count() == 3);
  CHECK(difference(a, b).count() == 1);
  CHECK((~a).count() == 62);
  CHECK(subset_of(a & b, a));
  CHECK(shift(a, 1, 0)(4, 2));
  CHECK(shift(a, 10, 0).empty());
  CHECK(touches_margin(shift(a, -2, 0), 1));
  CHECK(inner_boundary(CellSet(g, true)).count() == 28);
}
