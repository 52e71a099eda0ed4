#include "mmflow/atw.hpp"

#include "mmflow/maxflow.hpp"

#include <cstdio>
#include <ostream>

namespace mmflow {

MarginBreach::MarginBreach(long step_, const std::string& what)
    : Error("margin breach at step " + std::to_string(step_) + ": " + what), step(step_) {}

namespace {

using Cap = MaxFlowGraph::Cap;

constexpr double kCapLimit = 4e18;

Cap quantize(double x) {
  if (x >= kCapLimit / kCapacityScale) return static_cast<Cap>(kCapLimit);
  if (x <= -kCapLimit / kCapacityScale) return -static_cast<Cap>(kCapLimit);
  return std::llround(x * kCapacityScale);
}

struct PairCap {
  int di, dj;
  Cap forward;   // i in F, i+o not in F
  Cap backward;  // i+o in F, i not in F
};

// One entry per unordered offset pair {o, -o}.
std::vector<PairCap> pair_caps(const PerimeterModel& J, double dx) {
  std::vector<PairCap> out;
  for (const auto& o : J.weights) {
    if (!(o.dj > 0 || (o.dj == 0 && o.di > 0))) continue;
    Cap back = 0;
    for (const auto& r : J.weights)
      if (r.di == -o.di && r.dj == -o.dj) back = quantize(r.weight * dx);
    out.push_back({o.di, o.dj, quantize(o.weight * dx), back});
  }
  return out;
}

Field distance_or_infinite(const CellSet& e, const Anisotropy& a) {
  if (e.empty()) return Field::Constant(e.grid.nx, e.grid.ny, kInf);
  if (e.full()) return Field::Constant(e.grid.nx, e.grid.ny, -kInf);
  return signed_distance(e, a).values;
}

template <typename Dissipation>
StepEnergy assemble(const CellSet& e, const PerimeterModel& J, const Anisotropy& a, double fk,
                    double h, Dissipation&& g) {
  const Grid& grid = e.grid;
  const Field sd = distance_or_infinite(e, a);
  const double area = grid.dx * grid.dx;
  StepEnergy se{J, grid, Field(grid.nx, grid.ny), CellSet(grid), CellSet(grid)};
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const double gv = g(sd(i, j) / h);
      if (gv == -kInf) {
        se.unary(i, j) = -kInf;
        se.forcedIn.mask(i, j) = true;
      } else if (gv == kInf) {
        se.unary(i, j) = kInf;
        se.forcedOut.mask(i, j) = true;
      } else {
        se.unary(i, j) = (gv - fk) * area;
      }
    }
  return se;
}

}  // namespace

StepEnergy build_step_energy(const CellSet& stored, Phase phase, const PerimeterModel& J,
                             const Nonlinearity& n, const Anisotropy& a, double fk, double h) {
  if (!(h > 0)) throw Error("scheme.h: must be positive");
  if (phase == Phase::BoundedSet)
    return assemble(stored, J, a, fk, h, [&](double s) { return g_eval(n, s); });
  return assemble(stored, J, a, -fk, h, [&](double s) { return -g_eval(n, -s); });
}

StepEnergy build_truncated_energy(const CellSet& e, const StepContext& ctx, double fk, double n) {
  return assemble(e, ctx.J, ctx.psi, fk, ctx.h,
                  [&](double s) { return std::max(g_eval(ctx.G, s), -n); });
}

double step_energy_value(const StepEnergy& se, const CellSet& f) {
  if ((f.mask && se.forcedOut.mask).any() || !subset_of(se.forcedIn, f)) return kInf;
  const double unary = (f.mask && !se.forcedIn.mask).select(se.unary, 0.0).sum();
  return unary + perimeter_energy(se.J, f);
}

StepResult minimize_step(const StepEnergy& se) {
  const Grid& g = se.grid;
  if ((se.forcedIn.mask && se.forcedOut.mask).any())
    throw InfeasibleConstraints("step energy: forced-in and forced-out cells overlap");

  const int nx = g.nx, ny = g.ny;
  const long n = g.cells();
  auto idx = [nx](int i, int j) { return static_cast<long>(i) + static_cast<long>(nx) * j; };
  const auto caps = pair_caps(se.J, g.dx);

  // state: 0 free, +1 in every minimizer, -1 in none.
  std::vector<signed char> state(n, 0);
  std::vector<Cap> q(n), slack(n, 0);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const long c = idx(i, j);
      if (se.forcedIn(i, j))
        state[c] = 1;
      else if (se.forcedOut(i, j))
        state[c] = -1;
      else
        q[c] = quantize(se.unary(i, j));
    }

  // Visit the neighbours of (i, j); fn(ni, nj, cap_out, cap_in) where cap_out
  // is paid when (i,j) is in F and the neighbour is not, cap_in the reverse.
  auto for_neighbours = [&](int i, int j, auto&& fn) {
    for (const auto& p : caps) {
      if (g.contains(i + p.di, j + p.dj)) fn(i + p.di, j + p.dj, p.forward, p.backward);
      if (g.contains(i - p.di, j - p.dj)) fn(i - p.di, j - p.dj, p.backward, p.forward);
    }
  };

  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      if (state[idx(i, j)] == 0)
        for_neighbours(i, j, [&](int, int, Cap out, Cap in) { slack[idx(i, j)] += std::max(out, in); });

  // Fold a decided cell into its free neighbours.
  std::vector<long> work;
  std::vector<char> queued(n, 0);
  auto fold = [&](int i, int j) {
    const signed char s = state[idx(i, j)];
    for_neighbours(i, j, [&](int a, int b, Cap out, Cap in) {
      const long m = idx(a, b);
      if (state[m] != 0) return;
      // Pair terms seen from m: m in F and (i,j) out costs `in`;
      // (i,j) in F and m out costs `out`.
      if (s > 0)
        q[m] -= out;
      else
        q[m] += in;
      slack[m] -= std::max(out, in);
      if (!queued[m]) {
        queued[m] = 1;
        work.push_back(m);
      }
    });
  };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      if (state[idx(i, j)] != 0) fold(i, j);
  for (long c = 0; c < n; ++c)
    if (state[c] == 0 && !queued[c]) {
      queued[c] = 1;
      work.push_back(c);
    }
  // Adding a free cell changes the energy by q +- (at most) slack, so a
  // unary term beyond the slack decides the cell for every minimizer.
  while (!work.empty()) {
    const long c = work.back();
    work.pop_back();
    queued[c] = 0;
    if (state[c] != 0) continue;
    if (q[c] > slack[c])
      state[c] = -1;
    else if (q[c] < -slack[c])
      state[c] = 1;
    else
      continue;
    fold(static_cast<int>(c % nx), static_cast<int>(c / nx));
  }

  std::vector<int> node(n, -1);
  int free_count = 0;
  for (long c = 0; c < n; ++c)
    if (state[c] == 0) node[c] = free_count++;

  MaxFlowGraph graph(free_count, static_cast<std::size_t>(free_count) * caps.size());
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const long c = idx(i, j);
      if (node[c] < 0) continue;
      // F is the source side: a positive unary is paid by cutting i->sink.
      if (q[c] > 0)
        graph.add_terminal(node[c], 0, q[c]);
      else if (q[c] < 0)
        graph.add_terminal(node[c], -q[c], 0);
      for (const auto& p : caps) {
        if (!g.contains(i + p.di, j + p.dj)) continue;
        const long m = idx(i + p.di, j + p.dj);
        if (node[m] >= 0) graph.add_edge(node[c], node[m], p.forward, p.backward);
      }
    }
  graph.solve();
  const auto src = graph.source_side();
  const auto snk = graph.sink_reachers();

  StepResult r{CellSet(g), CellSet(g), 0.0, {}};
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const long c = idx(i, j);
      if (state[c] > 0) {
        r.minimal.mask(i, j) = r.maximal.mask(i, j) = true;
      } else if (state[c] == 0) {
        r.minimal.mask(i, j) = src[node[c]] != 0;
        r.maximal.mask(i, j) = snk[node[c]] == 0;
      }
    }
  r.energy = step_energy_value(se, r.minimal);
  r.flowStats = {graph.nodes(), static_cast<long>(graph.arcs() / 2), graph.augmentations()};
  return r;
}

PhaseSet atw_step(const PhaseSet& e, const StepContext& ctx, long k, MinimizerChoice choice) {
  const double fk = forcing_step_average(ctx.f, k, ctx.h);
  const StepEnergy se = build_step_energy(e.stored, e.phase, ctx.J, ctx.G, ctx.psi, fk, ctx.h);
  StepResult r = minimize_step(se);
  // T^-E = complement of the maximal dual minimizer, and vice versa.
  const bool take_minimal = (choice == MinimizerChoice::Minimal) == (e.phase == Phase::BoundedSet);
  PhaseSet out{e.phase, take_minimal ? std::move(r.minimal) : std::move(r.maximal)};
  if (touches_margin(out.stored, ctx.margin))
    throw MarginBreach(k, e.phase == Phase::BoundedSet
                              ? "bounded set reached the margin band"
                              : "complement of an unbounded set reached the margin band");
  return out;
}

TruncationReport truncation_sequence_check(const CellSet& e, const StepContext& ctx, long k,
                                           const std::vector<double>& nList) {
  if (std::isfinite(ctx.G.a())) throw Error("truncation check: needs a = +inf");
  const double fk = forcing_step_average(ctx.f, k, ctx.h);
  TruncationReport rep;
  for (double n : nList) {
    rep.chain.push_back(minimize_step(build_truncated_energy(e, ctx, fk, n)).minimal);
    if (rep.chain.size() > 1 && !subset_of(rep.chain[rep.chain.size() - 2], rep.chain.back()))
      rep.nested = false;
  }
  if (!rep.chain.empty()) {
    const StepEnergy full = build_step_energy(e, Phase::BoundedSet, ctx.J, ctx.G, ctx.psi, fk, ctx.h);
    rep.reachesMinimal = rep.chain.back() == minimize_step(full).minimal;
  }
  return rep;
}

void write_graph_csv(std::ostream& os, const StepEnergy& se) {
  const Grid& g = se.grid;
  const auto caps = pair_caps(se.J, g.dx);
  auto id = [&](int i, int j) { return static_cast<long>(i) + static_cast<long>(g.nx) * j; };
  os << "kind,from,to,capacity\n";
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double u = se.unary(i, j);
      if (u == -kInf)
        os << "source," << id(i, j) << ",-1,inf\n";
      else if (u == kInf)
        os << "sink," << id(i, j) << ",-1,inf\n";
      else if (u > 0)
        os << "sink," << id(i, j) << ",-1," << quantize(u) << '\n';
      else if (u < 0)
        os << "source," << id(i, j) << ",-1," << -quantize(u) << '\n';
      for (const auto& p : caps) {
        if (!g.contains(i + p.di, j + p.dj)) continue;
        os << "edge," << id(i, j) << ',' << id(i + p.di, j + p.dj) << ',' << p.forward << '\n';
        os << "edge," << id(i + p.di, j + p.dj) << ',' << id(i, j) << ',' << p.backward << '\n';
      }
    }
}

}  // namespace mmflow
