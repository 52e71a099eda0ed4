#include "mmflow/atw.hpp"
#include "mmflow/oracles.hpp"

#include "support.hpp"

#include <doctest.h>

#include <sstream>

using namespace mmflow;
using mmflow::testing::random_blobs;

namespace {

// Pairwise energy summed pair by pair, independent of perimeter_energy.
double brute_energy(const StepEnergy& se, unsigned long bits) {
  const Grid& g = se.grid;
  auto in = [&](int i, int j) { return (bits >> (i + g.nx * j)) & 1UL; };
  double e = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (in(i, j)) {
        if (se.forcedOut(i, j)) return kInf;
        if (!se.forcedIn(i, j)) e += se.unary(i, j);
      } else if (se.forcedIn(i, j)) {
        return kInf;
      }
      for (const auto& o : se.J.weights) {
        const int a = i + o.di, b = j + o.dj;
        if (g.contains(a, b) && in(i, j) && !in(a, b)) e += o.weight * g.dx;
      }
    }
  return e;
}

struct Enumeration {
  double best = kInf;
  CellSet meet, join;
};

Enumeration enumerate(const StepEnergy& se) {
  const Grid& g = se.grid;
  const long n = g.cells();
  std::vector<double> energies(1UL << n);
  Enumeration out;
  for (unsigned long b = 0; b < energies.size(); ++b) {
    energies[b] = brute_energy(se, b);
    out.best = std::min(out.best, energies[b]);
  }
  unsigned long meet = ~0UL, join = 0;
  for (unsigned long b = 0; b < energies.size(); ++b)
    if (energies[b] <= out.best + 1e-9) {
      meet &= b;
      join |= b;
    }
  out.meet = out.join = CellSet(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      out.meet.mask(i, j) = (meet >> (i + g.nx * j)) & 1UL;
      out.join.mask(i, j) = (join >> (i + g.nx * j)) & 1UL;
    }
  return out;
}

// Four-neighbour model with unit weights: integer energies, so ties are exact.
PerimeterModel unit_four() {
  PerimeterModel J;
  J.neighborhood = 4;
  J.weights = {{1, 0, 1.0}, {-1, 0, 1.0}, {0, 1, 1.0}, {0, -1, 1.0}};
  return J;
}

StepContext context(const Nonlinearity& G, double h, int margin = 2) {
  StepContext c;
  c.J = PerimeterModel::local_crofton(16);
  c.psi = Anisotropy::euclidean();
  c.G = G;
  c.f = Forcing::zero();
  c.h = h;
  c.margin = margin;
  return c;
}

}  // namespace

TEST_CASE("exhaustive enumeration on small grids") {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> u(-3, 3);
  std::uniform_int_distribution<int> ui(-3, 3);
  std::bernoulli_distribution forced(0.1);
  const std::pair<int, int> shapes[] = {{4, 4}, {4, 5}, {5, 4}};
  for (int t = 0; t < 120; ++t) {
    const auto [nx, ny] = shapes[t % 3];
    const bool ties = t % 4 == 0;
    const Grid g(nx, ny, ties || t % 2 ? 1.0 : 0.37);
    StepEnergy se{ties ? unit_four() : PerimeterModel::local_crofton(8), g, Field(nx, ny), CellSet(g), CellSet(g)};
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        se.unary(i, j) = ties ? ui(rng) : u(rng);
        if (forced(rng)) {
          const bool inside = se.unary(i, j) < 0;
          se.unary(i, j) = inside ? -kInf : kInf;
          (inside ? se.forcedIn : se.forcedOut).mask(i, j) = true;
        }
      }
    const auto r = minimize_step(se);
    const auto oracle = enumerate(se);
    CHECK(std::abs(r.energy - oracle.best) <= 1e-9);
    CHECK(std::abs(step_energy_value(se, r.maximal) - oracle.best) <= 1e-9);
    CHECK(r.minimal == oracle.meet);
    CHECK(r.maximal == oracle.join);
  }
}

TEST_CASE("trivial energies and infeasibility") {
  const Grid g(6, 6, 0.5);
  StepEnergy se{PerimeterModel::local_crofton(16), g, Field::Constant(6, 6, 1.0), CellSet(g), CellSet(g)};
  auto r = minimize_step(se);
  CHECK(r.minimal.empty());
  CHECK(r.maximal.empty());
  CHECK(r.energy == 0.0);

  se.unary.setConstant(-1.0);
  r = minimize_step(se);
  CHECK(r.minimal.full());

  se.forcedIn.mask(2, 2) = se.forcedOut.mask(2, 2) = true;
  CHECK_THROWS_AS(minimize_step(se), InfeasibleConstraints);
}

TEST_CASE("step energy construction") {
  const double dx = 1.0 / 32, h = 2e-3;
  const Grid g(32, 32, dx);
  const auto e = make_disk(g, Vec2(0.5, 0.5), 0.25);
  const auto sd = signed_distance(e, Anisotropy::euclidean());
  const auto J = PerimeterModel::local_crofton(16);

  const auto id = build_step_energy(e, Phase::BoundedSet, J, Nonlinearity::identity(),
                                    Anisotropy::euclidean(), 0.0, h);
  CHECK((id.unary - sd.values / h * dx * dx).abs().maxCoeff() <= 1e-12);
  CHECK(id.forcedIn.empty());
  CHECK(id.forcedOut.empty());

  const double M = 2.0;
  const auto cl = build_step_energy(e, Phase::BoundedSet, J, Nonlinearity::clamp(M),
                                    Anisotropy::euclidean(), 0.0, 0.01);
  CHECK(cl.forcedIn == CellSet(g, sd.values / 0.01 <= -M));
  CHECK(cl.forcedOut == CellSet(g, sd.values / 0.01 >= M));

  const auto neg = build_step_energy(e, Phase::BoundedSet, J, Nonlinearity::negative_part(),
                                     Anisotropy::euclidean(), 0.0, h);
  CHECK(neg.forcedOut == ~e);

  // Dual energy on the stored complement uses -g(-s) and -f.
  const auto dual = build_step_energy(e, Phase::BoundedComplement, J, Nonlinearity::power(3.0),
                                      Anisotropy::euclidean(), 0.7, h);
  for (int j = 0; j < g.ny; j += 5)
    for (int i = 0; i < g.nx; i += 3) {
      const double expect = (-g_eval(Nonlinearity::power(3.0), -sd.values(i, j) / h) + 0.7) * dx * dx;
      CHECK(dual.unary(i, j) == doctest::Approx(expect).epsilon(1e-12));
    }

  std::ostringstream os;
  write_graph_csv(os, id);
  CHECK(os.str().rfind("kind,from,to,capacity\n", 0) == 0);
}

TEST_CASE("trivial phases are stationary") {
  const Grid g(24, 24, 1.0 / 24);
  auto ctx = context(Nonlinearity::identity(), 1e-3);
  ctx.f = Forcing::constant(-1.0);
  const auto empty = atw_step(PhaseSet::bounded(CellSet(g)), ctx, 0, MinimizerChoice::Maximal);
  CHECK(empty.stored.empty());
  ctx.f = Forcing::constant(1.0);
  const auto full = atw_step(PhaseSet::from_complement(CellSet(g)), ctx, 0, MinimizerChoice::Minimal);
  CHECK(full.cells().full());
}

TEST_CASE("one step of a shrinking disk") {
  const double dx = 1.0 / 128, h = 5e-4, r0 = 0.35;
  const Grid g(256, 256, dx);
  const auto ctx = context(Nonlinearity::identity(), h, 8);
  const auto e = make_disk(g, g.center(128, 128), r0);
  const auto next = atw_step(PhaseSet::bounded(e), ctx, 0, MinimizerChoice::Minimal);
  CHECK(subset_of(next.stored, e));
  CHECK(std::abs(measure_radius(next.stored).radius - (r0 - h / r0)) <= 2 * dx);
}

TEST_CASE("comparison principle, all phase combinations") {
  std::mt19937_64 rng(52);
  const double dx = 1.0 / 40;
  const Grid g(40, 40, dx);
  const Nonlinearity kinds[] = {Nonlinearity::identity(), Nonlinearity::clamp(2.0),
                                Nonlinearity::power(1.0 / 3)};
  for (const auto& G : kinds)
    for (int t = 0; t < 12; ++t) {
      auto ctx = context(G, 4e-3, 3);
      ctx.f = Forcing::constant(t % 2 ? 0.5 : -0.5);
      const auto small = random_blobs(g, rng, 3, 2 * dx, 6 * dx, 8);
      const auto big = small | random_blobs(g, rng, 2, 2 * dx, 6 * dx, 8);
      for (auto choice : {MinimizerChoice::Minimal, MinimizerChoice::Maximal}) {
        const auto a = atw_step(PhaseSet::bounded(small), ctx, 0, choice);
        const auto b = atw_step(PhaseSet::bounded(big), ctx, 0, choice);
        CHECK(subset_of(a.cells(), b.cells()));
        // Unbounded sets: complements of the blobs, inclusion reversed.
        const auto ua = atw_step(PhaseSet::from_complement(big), ctx, 0, choice);
        const auto ub = atw_step(PhaseSet::from_complement(small), ctx, 0, choice);
        CHECK(subset_of(ua.cells(), ub.cells()));
        // Bounded inside unbounded.
        const auto hole = random_blobs(g, rng, 1, 2 * dx, 4 * dx, 8);
        if ((hole & small).empty()) {
          const auto ub2 = atw_step(PhaseSet::from_complement(hole), ctx, 0, choice);
          CHECK(subset_of(a.cells(), ub2.cells()));
        }
      }
      const auto lo = atw_step(PhaseSet::bounded(big), ctx, 0, MinimizerChoice::Minimal);
      const auto hi = atw_step(PhaseSet::bounded(big), ctx, 0, MinimizerChoice::Maximal);
      CHECK(subset_of(lo.stored, hi.stored));
    }
}

TEST_CASE("complement phase equals the primal energy on the actual set") {
  std::mt19937_64 rng(53);
  const double dx = 1.0 / 40;
  const Grid g(40, 40, dx);
  for (const auto& G : {Nonlinearity::identity(), Nonlinearity::clamp(3.0), Nonlinearity::power(3.0)})
    for (int t = 0; t < 6; ++t) {
      auto ctx = context(G, 3e-3, 3);
      ctx.f = Forcing::constant(t % 2 ? 1.5 : -1.5);
      const auto k = random_blobs(g, rng, 3, 2 * dx, 7 * dx, 8);
      const auto primal = minimize_step(
          build_step_energy(~k, Phase::BoundedSet, ctx.J, G, ctx.psi, ctx.f.value, ctx.h));
      const auto lo = atw_step(PhaseSet::from_complement(k), ctx, 0, MinimizerChoice::Minimal);
      const auto hi = atw_step(PhaseSet::from_complement(k), ctx, 0, MinimizerChoice::Maximal);
      CHECK(lo.cells() == primal.minimal);
      CHECK(hi.cells() == primal.maximal);
    }
}

TEST_CASE("dissipation comparison") {
  std::mt19937_64 rng(54);
  const double dx = 1.0 / 40;
  const Grid g(40, 40, dx);
  // G2 = s/2 for s > 0, s below: g2 = max(s, 2s) >= g1 = s.
  const auto G2 = Nonlinearity::piecewise({{-1, -1}, {0, 0}, {2, 1}});
  for (int t = 0; t < 10; ++t) {
    auto c1 = context(Nonlinearity::identity(), 3e-3, 3);
    c1.f = Forcing::constant(t % 2 ? 2.0 : -2.0);
    auto c2 = c1;
    c2.G = G2;
    const auto e = random_blobs(g, rng, 3, 2 * dx, 7 * dx, 8);
    for (auto choice : {MinimizerChoice::Minimal, MinimizerChoice::Maximal}) {
      const auto a = atw_step(PhaseSet::bounded(e), c2, 0, choice);
      const auto b = atw_step(PhaseSet::bounded(e), c1, 0, choice);
      CHECK(subset_of(a.stored, b.stored));
    }
  }
}

TEST_CASE("translation equivariance and confinement") {
  std::mt19937_64 rng(55);
  const double dx = 1.0 / 48, h = 4e-3, M = 2.0;
  const Grid g(48, 48, dx);
  const auto ctx = context(Nonlinearity::clamp(M), h, 3);
  for (int t = 0; t < 10; ++t) {
    const auto e = random_blobs(g, rng, 3, 2 * dx, 6 * dx, 12);
    const auto r = atw_step(PhaseSet::bounded(e), ctx, 0, MinimizerChoice::Minimal);
    std::uniform_int_distribution<int> sh(-3, 3);
    const int di = sh(rng), dj = sh(rng);
    const auto rs = atw_step(PhaseSet::bounded(shift(e, di, dj)), ctx, 0, MinimizerChoice::Minimal);
    CHECK(rs.stored == shift(r.stored, di, dj));

    const auto sd = signed_distance(e, ctx.psi);
    CHECK(subset_of(r.stored, level_band(sd, M * h)));
    CHECK(subset_of(level_band(sd, -M * h), r.stored));
  }
}

TEST_CASE("margin breach") {
  const double dx = 1.0 / 24;
  const Grid g(24, 24, dx);
  auto ctx = context(Nonlinearity::identity(), 0.05, 4);
  ctx.f = Forcing::constant(40.0);
  const auto e = make_disk(g, g.center(12, 12), 5 * dx);
  CHECK_THROWS_AS(atw_step(PhaseSet::bounded(e), ctx, 3, MinimizerChoice::Minimal), MarginBreach);
  try {
    atw_step(PhaseSet::bounded(e), ctx, 3, MinimizerChoice::Minimal);
  } catch (const MarginBreach& b) {
    CHECK(b.step == 3);
  }
}

TEST_CASE("truncation chain") {
  const double dx = 1.0 / 48, h = 2e-3;
  const Grid g(48, 48, dx);
  std::mt19937_64 rng(56);
  auto ctx = context(Nonlinearity::identity(), h, 3);
  ctx.f = Forcing::constant(1.0);
  const auto e = random_blobs(g, rng, 3, 3 * dx, 8 * dx, 10);
  const double range = signed_distance(e, ctx.psi).values.abs().maxCoeff() / h;
  std::vector<double> ns{0.5, 1, 2, 4, 8, 16, 32, 64, 128};
  ns.push_back(std::ceil(range));
  ns.push_back(std::ceil(range) + 10);
  const auto rep = truncation_sequence_check(e, ctx, 0, ns);
  CHECK(rep.nested);
  CHECK(rep.reachesMinimal);
  CHECK(rep.chain[rep.chain.size() - 2] == rep.chain.back());

  ctx.G = Nonlinearity::clamp(1.0);
  CHECK_THROWS_AS(truncation_sequence_check(e, ctx, 0, ns), Error);
}
