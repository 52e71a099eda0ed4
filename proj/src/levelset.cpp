#include "mmflow/levelset.hpp"

#include "mmflow/distance.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

namespace mmflow {

namespace {
std::string nesting_message(long step, double level) {
  std::ostringstream os;
  os << "nesting violation at step " << step << ", level " << level;
  return os.str();
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. The first exception
// in index order is rethrown, so failures are reported deterministically.
template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  auto run = [&](int i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const int workers = std::clamp(threads, 1, std::max(n, 1));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) run(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int i; (i = next.fetch_add(1)) < n;) run(i);
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}
}  // namespace

NestingViolation::NestingViolation(long step_, double level_)
    : Error(nesting_message(step_, level_)), step(step_), level(level_) {}

std::vector<double> uniform_levels(double floor_value, double ceil_value, int L) {
  if (L < 2) throw Error("scheme.levelCount: must be >= 2");
  std::vector<double> s(L);
  for (int i = 1; i <= L; ++i) s[i - 1] = floor_value + i * (ceil_value - floor_value) / L;
  s.back() = ceil_value;
  return s;
}

LevelStack decompose(const LevelFunction& u, int L, int margin) {
  const double outside = outside_value(u, margin);
  LevelStack st;
  st.levels = uniform_levels(u.floorValue, u.ceilValue, L);
  for (double s : st.levels) {
    if (s <= outside)
      st.sets.push_back(PhaseSet::from_complement(CellSet(u.grid, u.values < s)));
    else
      st.sets.push_back(PhaseSet::bounded(CellSet(u.grid, u.values >= s)));
  }
  return st;
}

LevelFunction reconstruct(const LevelStack& stack, const Grid& g, double floor_value,
                          double ceil_value) {
  Field v = Field::Constant(g.nx, g.ny, floor_value);
  for (size_t i = 0; i < stack.levels.size(); ++i) {
    const CellSet e = stack.sets[i].cells();
    v = (e.mask && (v < stack.levels[i])).select(stack.levels[i], v);
  }
  return LevelFunction(g, std::move(v), floor_value, ceil_value);
}

LevelStack lift_stack(const LevelStack& stack, const StepContext& ctx, long k,
                      const LiftOptions& opt) {
  const int n = static_cast<int>(stack.sets.size());
  LevelStack out{stack.levels, stack.sets};
  // Runs of equal sets (plateaus of u) are evolved once.
  std::vector<int> first;
  for (int i = 0; i < n; ++i)
    if (i == 0 || stack.sets[i].phase != stack.sets[i - 1].phase ||
        !(stack.sets[i].stored == stack.sets[i - 1].stored))
      first.push_back(i);
  parallel_for(static_cast<int>(first.size()), opt.threads, [&](int r) {
    const int i = first[r];
    // The empty bounded set and the full grid are fixed points.
    if (stack.sets[i].stored.empty()) return;
    try {
      out.sets[i] = atw_step(stack.sets[i], ctx, k, opt.choice);
    } catch (const MarginBreach&) {
      std::ostringstream os;
      os << "level " << stack.levels[i] << " reached the margin band";
      throw MarginBreach(k, os.str());
    }
  });
  for (int i = 1, r = 0; i < n; ++i) {
    if (r + 1 < static_cast<int>(first.size()) && first[r + 1] == i) {
      ++r;
      continue;
    }
    out.sets[i] = out.sets[i - 1];
  }
  for (int i = 0; i + 1 < n; ++i)
    if (!subset_of(out.sets[i + 1].cells(), out.sets[i].cells()))
      throw NestingViolation(k, stack.levels[i + 1]);
  return out;
}

LevelFunction lift_step(const LevelFunction& u, const StepContext& ctx, long k,
                        const LiftOptions& opt) {
  const LevelStack next = lift_stack(decompose(u, opt.levelCount, ctx.margin), ctx, k, opt);
  return reconstruct(next, u.grid, u.floorValue, u.ceilValue);
}

double interface_displacement(const CellSet& before, const CellSet& after) {
  if (before == after) return 0.0;
  double d = 0.0;
  const CellSet gained = difference(after, before);
  const CellSet lost = difference(before, after);
  if (!gained.empty()) {
    if (before.empty()) return kInf;
    d = std::max(d, gained.mask.select(distance_to(before, Anisotropy::euclidean()), 0.0).maxCoeff());
  }
  if (!lost.empty()) {
    if (before.full()) return kInf;
    d = std::max(d, lost.mask.select(distance_to(~before, Anisotropy::euclidean()), 0.0).maxCoeff());
  }
  return d;
}

EvolutionRecord evolve(const LevelFunction& u0, const StepContext& ctx, double T,
                       const EvolveOptions& opt) {
  const long steps = std::lround(T / ctx.h);
  if (steps < 1 || std::abs(steps * ctx.h - T) > 1e-9 * std::max(T, 1.0))
    throw Error("scheme.T: must be a positive multiple of scheme.h");
  const int stride = std::max(1, opt.snapshotStride);

  EvolutionRecord rec;
  rec.times.push_back(0.0);
  rec.snapshots.push_back(u0);
  LevelFunction u = u0;
  for (long k = 0; k < steps; ++k) {
    const LevelStack before = decompose(u, opt.levelCount, ctx.margin);
    const LevelStack after = lift_stack(before, ctx, k, opt);
    std::vector<double> disp(before.sets.size(), 0.0);
    parallel_for(static_cast<int>(disp.size()), opt.threads, [&](int i) {
      disp[i] = interface_displacement(before.sets[i].cells(), after.sets[i].cells());
    });
    rec.perStepDisplacement.push_back(*std::max_element(disp.begin(), disp.end()));
    u = reconstruct(after, u.grid, u.floorValue, u.ceilValue);
    if ((k + 1) % stride == 0 || k + 1 == steps) {
      rec.times.push_back((k + 1) * ctx.h);
      rec.snapshots.push_back(u);
    }
  }
  return rec;
}

ModulusReport modulus_check(const LevelFunction& u0, const EvolutionRecord& record) {
  ModulusReport rep;
  const Grid& g = u0.grid;
  // Lipschitz constant over 8-neighbours. Lattice paths of 8-steps are at
  // most sec(pi/8) longer than the straight segment, which bounds the
  // constant over all pairs.
  double l8 = 0.0;
  const int di[4] = {1, 0, 1, 1}, dj[4] = {0, 1, 1, -1};
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      for (int d = 0; d < 4; ++d) {
        const int a = i + di[d], b = j + dj[d];
        if (!g.contains(a, b)) continue;
        const double len = g.dx * std::hypot(di[d], dj[d]);
        l8 = std::max(l8, std::abs(u0(a, b) - u0(i, j)) / len);
      }
  rep.lipschitz = l8 / std::cos(std::numbers::pi / 8);
  if (rep.lipschitz == 0.0) return rep;

  for (size_t snap = 0; snap < record.snapshots.size(); ++snap) {
    const LevelFunction& u = record.snapshots[snap];
    std::set<double> distinct(u.values.data(), u.values.data() + u.values.size());
    const std::vector<double> vals(distinct.begin(), distinct.end());
    // Smallest attained value strictly above u(x).
    Field next(g.nx, g.ny);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        auto it = std::upper_bound(vals.begin(), vals.end(), u(i, j));
        next(i, j) = it == vals.end() ? kInf : *it;
      }
    for (size_t p = 1; p < vals.size(); ++p) {
      const double sp = vals[p];
      const CellSet upper(g, u.values >= sp);
      const Field d = distance_to(upper, Anisotropy::euclidean()) / g.dx;
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
          if (u(i, j) >= sp) continue;
          const double radius = std::floor((sp - next(i, j)) / rep.lipschitz / g.dx + 1e-9);
          const double v = radius - d(i, j);
          if (v > rep.worstViolationCells) {
            rep.worstViolationCells = v;
            rep.worstSnapshot = static_cast<long>(snap);
          }
        }
    }
  }
  rep.pass = rep.worstViolationCells <= 1.0;
  return rep;
}

RefinementStudy h_refinement_study(const LevelFunction& u0, const StepContext& ctx,
                                   const std::vector<double>& hList, double T,
                                   const EvolveOptions& opt) {
  if (hList.size() < 3) throw Error("refinement study: needs at least three step sizes");
  for (size_t i = 1; i < hList.size(); ++i)
    if (!(hList[i] < hList[i - 1])) throw Error("refinement study: h values must decrease");

  std::vector<EvolutionRecord> runs;
  for (double h : hList) {
    StepContext c = ctx;
    c.h = h;
    EvolveOptions o = opt;
    o.snapshotStride = static_cast<int>(std::lround(hList.front() / h));
    runs.push_back(evolve(u0, c, T, o));
  }
  const EvolutionRecord& fine = runs.back();
  RefinementStudy st;
  for (size_t r = 0; r < runs.size(); ++r) {
    if (runs[r].snapshots.size() != fine.snapshots.size())
      throw Error("refinement study: h values must divide the coarsest step");
    double gap = 0.0;
    for (size_t s = 0; s < fine.snapshots.size(); ++s)
      gap = std::max(gap, (runs[r].snapshots[s].values - fine.snapshots[s].values).abs().maxCoeff());
    st.rows.push_back({hList[r], gap});
    if (r > 0 && gap > st.rows[r - 1].gap) st.nonincreasing = false;
  }
  return st;
}

FatteningReport fattening_report(const LevelFunction& u0, const StepContext& ctx, double T,
                                 const EvolveOptions& opt) {
  EvolveOptions lo = opt, hi = opt;
  lo.choice = MinimizerChoice::Minimal;
  hi.choice = MinimizerChoice::Maximal;
  const EvolutionRecord a = evolve(u0, ctx, T, lo);
  const EvolutionRecord b = evolve(u0, ctx, T, hi);
  FatteningReport rep;
  for (size_t s = 0; s < a.snapshots.size(); ++s) {
    const long n = (a.snapshots[s].values != b.snapshots[s].values).count();
    rep.disagreeingCells.push_back(n);
    rep.worst = std::max(rep.worst, n);
  }
  return rep;
}

}  // namespace mmflow
