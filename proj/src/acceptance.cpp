#include "mmflow/acceptance.hpp"

#include "mmflow/levelset.hpp"
#include "mmflow/run.hpp"

#include <bit>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>

namespace mmflow {

namespace {

using Rng = std::mt19937_64;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

CellSet random_blobs(const Grid& g, Rng& rng, int count, double rmin, double rmax, int margin) {
  CellSet e(g);
  std::uniform_real_distribution<double> rad(rmin, rmax);
  for (int b = 0; b < count; ++b) {
    const double r = rad(rng);
    const Vec2 lo = g.center(margin, margin) + Vec2(r, r);
    const Vec2 hi = g.center(g.nx - 1 - margin, g.ny - 1 - margin) - Vec2(r, r);
    std::uniform_real_distribution<double> ux(lo(0), hi(0)), uy(lo(1), hi(1));
    const double cx = ux(rng), cy = uy(rng);
    e = e | make_disk(g, Vec2(cx, cy), r);
  }
  return e;
}

CellSet random_cells(const Grid& g, Rng& rng, double density, int margin) {
  std::bernoulli_distribution coin(density);
  CellSet e(g);
  for (int j = margin; j < g.ny - margin; ++j)
    for (int i = margin; i < g.nx - margin; ++i) e.mask(i, j) = coin(rng);
  return e;
}

// ---------------------------------------------------------------------------
// 1: exhaustive enumeration

struct Brute {
  double best = kInf;
  CellSet meet, join;
};

// Enumerates the free cells in Gray-code order, updating the energy by the
// flipped cell's unary and pair terms.
Brute brute_force(const StepEnergy& se) {
  const Grid& g = se.grid;
  const int n = static_cast<int>(g.cells());
  auto idx = [&](int i, int j) { return i + g.nx * j; };

  std::vector<std::vector<std::pair<int, double>>> nbrs(n);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      for (const auto& o : se.J.weights) {
        const int a = i + o.di, b = j + o.dj;
        // Each unordered pair is listed in both directions with equal weight
        // and is cut in exactly one of them.
        if (g.contains(a, b)) nbrs[idx(i, j)].push_back({idx(a, b), o.weight * g.dx});
      }
  std::vector<int> freeCells;
  std::vector<char> state(n, 0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (se.forcedIn(i, j)) state[idx(i, j)] = 1;
      else if (!se.forcedOut(i, j)) freeCells.push_back(idx(i, j));
    }
  std::vector<double> unary(n, 0.0);
  for (int c : freeCells) unary[c] = se.unary(c % g.nx, c / g.nx);

  auto direct = [&](const std::vector<char>& s) {
    double e = 0.0;
    for (int c = 0; c < n; ++c) {
      if (!s[c]) continue;
      e += unary[c];
      for (const auto& [d, w] : nbrs[c])
        if (!s[d]) e += w;
    }
    return e;
  };

  const int m = static_cast<int>(freeCells.size());
  const unsigned long total = 1UL << m;
  auto sweep = [&](auto&& visit) {
    std::vector<char> s = state;
    double e = direct(s);
    visit(0UL, e, s);
    for (unsigned long k = 1; k < total; ++k) {
      const int c = freeCells[std::countr_zero(k)];
      e += s[c] ? -unary[c] : unary[c];
      for (const auto& [d, w] : nbrs[c]) e += (s[c] != s[d]) ? -w : w;
      s[c] ^= 1;
      visit(k ^ (k >> 1), e, s);
    }
  };

  double approx = kInf;
  sweep([&](unsigned long, double e, const std::vector<char>&) { approx = std::min(approx, e); });
  Brute out;
  std::vector<std::pair<unsigned long, double>> near;
  sweep([&](unsigned long code, double e, const std::vector<char>& s) {
    if (e <= approx + 1e-7) near.push_back({code, direct(s)});
  });
  for (const auto& [code, e] : near) out.best = std::min(out.best, e);
  unsigned long meet = total - 1, join = 0;
  for (const auto& [code, e] : near)
    if (e <= out.best + 1e-9) {
      meet &= code;
      join |= code;
    }
  out.meet = CellSet(g, se.forcedIn.mask);
  out.join = out.meet;
  for (int b = 0; b < m; ++b) {
    const int c = freeCells[b];
    out.meet.mask(c % g.nx, c / g.nx) = (meet >> b) & 1UL;
    out.join.mask(c % g.nx, c / g.nx) = (join >> b) & 1UL;
  }
  return out;
}

Outcome criterion_exhaustive(const AcceptanceOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(opt.seed + 1);
  std::uniform_real_distribution<double> u(-3, 3);
  std::bernoulli_distribution forced(0.1);
  const std::pair<int, int> shapes[] = {{4, 4}, {4, 5}, {5, 4}};
  const auto J = PerimeterModel::local_crofton(8);
  int bad = 0;
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const auto [nx, ny] = shapes[t % 3];
    const Grid g(nx, ny, t % 2 ? 1.0 : 0.37);
    StepEnergy se{J, g, Field(nx, ny), CellSet(g), CellSet(g)};
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        se.unary(i, j) = u(rng);
        if (forced(rng)) {
          const bool inside = se.unary(i, j) < 0;
          se.unary(i, j) = inside ? -kInf : kInf;
          (inside ? se.forcedIn : se.forcedOut).mask(i, j) = true;
        }
      }
    const auto r = minimize_step(se);
    const auto b = brute_force(se);
    const double gap = std::abs(r.energy - b.best);
    worst = std::max(worst, gap);
    if (!(gap <= 1e-9) || !(r.minimal == b.meet) || !(r.maximal == b.join)) ++bad;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  Outcome o;
  o.pass = bad == 0 && secs < 30.0;
  o.detail = "200 instances, " + std::to_string(bad) + " mismatches, worst energy gap " + fmt(worst) +
             ", " + fmt(secs) + " s of 30 s";
  return o;
}

// ---------------------------------------------------------------------------
// 6: comparison principle

Outcome criterion_comparison(const AcceptanceOptions& opt) {
  Rng rng(opt.seed + 6);
  const double dx = 1.0 / 48;
  const Grid g(48, 48, dx);
  const std::pair<const char*, Nonlinearity> kinds[] = {{"identity", Nonlinearity::identity()},
                                                        {"clamp", Nonlinearity::clamp(2.0)},
                                                        {"power", Nonlinearity::power(1.0 / 3)}};
  std::uniform_real_distribution<double> force(-1.0, 1.0);
  int checked = 0, bad = 0, breaches = 0, moved = 0;
  std::string where;
  for (const auto& [label, G] : kinds) {
    StepContext ctx;
    ctx.J = PerimeterModel::local_crofton(16);
    ctx.G = G;
    ctx.h = 5e-3;
    ctx.margin = 4;
    for (const char* phase : {"bounded", "unbounded", "mixed"}) {
      for (int p = 0; p < 50; ++p) {
        ctx.f = Forcing::constant(force(rng));
        const CellSet a = random_blobs(g, rng, 2, 0.06, 0.14, 10);
        const CellSet b = a | random_blobs(g, rng, 2, 0.06, 0.14, 10);
        PhaseSet e, f;
        if (phase == std::string("bounded")) {
          e = PhaseSet::bounded(a);
          f = PhaseSet::bounded(b);
        } else if (phase == std::string("unbounded")) {
          e = PhaseSet::from_complement(b);
          f = PhaseSet::from_complement(a);
        } else {
          const CellSet k = random_blobs(g, rng, 2, 0.06, 0.14, 10);
          e = PhaseSet::bounded(difference(b, k));
          f = PhaseSet::from_complement(k);
        }
        for (auto choice : {MinimizerChoice::Minimal, MinimizerChoice::Maximal}) {
          try {
            const auto te = e.stored.empty() ? e : atw_step(e, ctx, 0, choice);
            const auto tf = f.stored.empty() ? f : atw_step(f, ctx, 0, choice);
            ++checked;
            if (!(te.stored == e.stored) || !(tf.stored == f.stored)) ++moved;
            if (!subset_of(te.cells(), tf.cells())) {
              ++bad;
              if (where.empty()) where = std::string(", first at ") + label + "/" + phase;
            }
          } catch (const MarginBreach&) {
            ++breaches;
          }
        }
      }
    }
  }
  Outcome o;
  o.pass = bad == 0 && breaches == 0;
  o.detail = std::to_string(checked) + " ordered pairs (" + std::to_string(moved) + " with motion), " +
             std::to_string(bad) + " inclusion failures, " +
             std::to_string(breaches) + " margin breaches" + where;
  return o;
}

// ---------------------------------------------------------------------------
// 7: operator laws

Field random_levels(const Grid& g, Rng& rng, double outside, int margin, int L, double top = 1.0) {
  Field v = Field::Constant(g.nx, g.ny, outside);
  std::uniform_real_distribution<double> rad(4 * g.dx, 9 * g.dx), slope(3, 12);
  for (int b = 0; b < 3; ++b) {
    const double r = rad(rng), k = slope(rng);
    const double lo = (margin + 1) * g.dx + r, hi = (g.nx - margin - 2) * g.dx - r;
    std::uniform_real_distribution<double> pos(lo, hi);
    const double cx = pos(rng), cy = pos(rng);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const double bump = std::clamp(k * (r - (g.center(i, j) - Vec2(cx, cy)).norm()), 0.0, top);
        const double q = std::floor(bump * L) / L;
        v(i, j) = outside == 0.0 ? std::max(v(i, j), q) : std::min(v(i, j), 1.0 - q);
      }
  }
  return v;
}

Field shift_field(const Field& v, int di, int dj, double fill) {
  Field out = Field::Constant(v.rows(), v.cols(), fill);
  for (int j = 0; j < v.cols(); ++j)
    for (int i = 0; i < v.rows(); ++i) {
      const int a = i + di, b = j + dj;
      if (a >= 0 && b >= 0 && a < v.rows() && b < v.cols()) out(a, b) = v(i, j);
    }
  return out;
}

Outcome criterion_operator_laws(const AcceptanceOptions& opt) {
  Rng rng(opt.seed + 7);
  const int L = 16, margin = 4;
  const Grid g(40, 40, 1.0 / 40);
  StepContext ctx;
  ctx.J = PerimeterModel::local_crofton(16);
  ctx.G = Nonlinearity::identity();
  ctx.f = Forcing::constant(0.5);
  ctx.h = 3e-3;
  ctx.margin = margin;
  LiftOptions lo;
  lo.levelCount = L;
  lo.threads = opt.threads;
  std::uniform_int_distribution<int> sh(-2, 2);
  int mono = 0, cst = 0, shf = 0;
  for (int t = 0; t < 20; ++t) {
    const double outside = t % 2 ? 1.0 : 0.0;
    const Field a = random_levels(g, rng, outside, margin + 2, L);
    const Field b = a.max(random_levels(g, rng, outside, margin + 2, L));
    const auto ta = lift_step(LevelFunction(g, a, 0, 1), ctx, 0, lo);
    const auto tb = lift_step(LevelFunction(g, b, 0, 1), ctx, 0, lo);
    if (!(ta.values <= tb.values).all()) ++mono;

    const Field w = random_levels(g, rng, 0.0, margin + 2, L, 0.5);
    const auto tw = lift_step(LevelFunction(g, w, 0, 1), ctx, 0, lo);
    const auto tw2 = lift_step(LevelFunction(g, w + 0.25, 0, 1), ctx, 0, lo);
    if (!(tw2.values == tw.values + 0.25).all()) ++cst;

    const int di = sh(rng), dj = sh(rng);
    const auto ts = lift_step(LevelFunction(g, shift_field(a, di, dj, outside), 0, 1), ctx, 0, lo);
    if (!(ts.values == shift_field(ta.values, di, dj, outside)).all()) ++shf;
  }
  Outcome o;
  o.pass = mono == 0 && cst == 0 && shf == 0;
  o.detail = "20 cases each; failures: monotonicity " + std::to_string(mono) + ", constants " +
             std::to_string(cst) + ", shifts " + std::to_string(shf);
  return o;
}

// ---------------------------------------------------------------------------
// 13: submodularity and translation invariance

Outcome criterion_submodularity(const AcceptanceOptions& opt) {
  Rng rng(opt.seed + 13);
  const Grid g(40, 40, 1.0 / 40);
  const std::pair<const char*, PerimeterModel> models[] = {
      {"crofton16", PerimeterModel::local_crofton(16)},
      {"fractional", PerimeterModel::fractional(0.5, 6, g.dx)}};
  std::uniform_real_distribution<double> dens(0.1, 0.9);
  std::uniform_int_distribution<int> sh(-3, 3);
  std::string detail;
  bool pass = true;
  for (const auto& [label, J] : models) {
    int sub = 0, trans = 0;
    const int pad = J.reach() + 3;
    for (int t = 0; t < 1000; ++t) {
      const CellSet e = t % 2 ? random_cells(g, rng, dens(rng), 0) : random_blobs(g, rng, 3, 0.05, 0.2, 2);
      const CellSet f = t % 3 ? random_cells(g, rng, dens(rng), 0) : random_blobs(g, rng, 3, 0.05, 0.2, 2);
      const auto ce = cut_counts(J, e), cf = cut_counts(J, f);
      const auto ci = cut_counts(J, e & f), cu = cut_counts(J, e | f);
      for (size_t k = 0; k < ce.size(); ++k)
        if (ci[k] + cu[k] > ce[k] + cf[k]) {
          ++sub;
          break;
        }

      const CellSet inner = random_cells(g, rng, dens(rng), pad);
      const int di = sh(rng), dj = sh(rng);
      if (cut_counts(J, shift(inner, di, dj)) != cut_counts(J, inner)) ++trans;
    }
    pass = pass && sub == 0 && trans == 0;
    detail += std::string(detail.empty() ? "" : "; ") + label + ": " + std::to_string(sub) +
              " submodularity and " + std::to_string(trans) + " translation failures in 1000";
  }
  return {pass, detail};
}

// ---------------------------------------------------------------------------
// Preset-driven criteria

Outcome from_preset(const std::string& name, const std::vector<std::string>& checks,
                    const AcceptanceOptions& opt) {
  RunOptions ro;
  ro.threads = opt.threads;
  const RunReport rep = run(preset(name), ro);
  Outcome o;
  o.detail = name + ":";
  if (!rep.error.empty()) {
    o.pass = false;
    o.detail += " " + rep.error;
    return o;
  }
  for (const auto& c : checks) {
    const CheckResult* r = rep.check(c);
    if (!r) {
      o.pass = false;
      o.detail += " " + c + " missing";
      continue;
    }
    o.pass = o.pass && r->pass;
    o.detail += " " + c + " " + fmt(r->worst) + (r->pass ? " <= " : " > ") + fmt(r->tolerance) + " " + r->unit;
    // Motion counts and gap series show whether a pass is more than a fixed point.
    for (const char* tag : {"moved", "gaps"})
      if (r->detail.find(tag) != std::string::npos) {
        const auto comma = r->detail.rfind(", ");
        if (comma != std::string::npos) o.detail += " (" + r->detail.substr(comma + 2) + ")";
        break;
      }
  }
  return o;
}

struct Criterion {
  const char* title;
  std::function<Outcome(const AcceptanceOptions&)> fn;
};

const std::map<int, Criterion>& registry() {
  static const std::map<int, Criterion> r = {
      {1, {"exhaustive minimizer equivalence", criterion_exhaustive}},
      {2, {"shrinking disk, identity",
           [](const auto& o) { return from_preset("shrink-disk-identity", {"radius", "anisometry"}, o); }}},
      {3, {"shrinking disk, power 1/3",
           [](const auto& o) { return from_preset("shrink-disk-power", {"radius"}, o); }}},
      {4, {"clamp displacement bound",
           [](const auto& o) { return from_preset("clamp-speed-bound", {"displacement"}, o); }}},
      {5, {"purely shrinking chains",
           [](const auto& o) { return from_preset("shrink-blobs-negative", {"monotone"}, o); }}},
      {6, {"comparison principle", criterion_comparison}},
      {7, {"operator laws", criterion_operator_laws}},
      {8, {"set and function evolutions commute",
           [](const auto& o) { return from_preset("disk-levels-commute", {"commute"}, o); }}},
      {9, {"forced equilibrium",
           [](const auto& o) { return from_preset("forced-equilibrium", {"radius", "fd_radius"}, o); }}},
      {10, {"barrier containment",
            [](const auto& o) {
              auto a = from_preset("identity-barrier", {"barrier"}, o);
              const auto b = from_preset("fractional-barrier", {"barrier"}, o);
              return Outcome{a.pass && b.pass, a.detail + "; " + b.detail};
            }}},
      {11, {"scheme vs finite differences",
            [](const auto& o) { return from_preset("fd-cross-check", {"fd_hausdorff"}, o); }}},
      {12, {"h-refinement", [](const auto& o) { return from_preset("h-refinement", {"refinement"}, o); }}},
      {13, {"submodularity and translation invariance", criterion_submodularity}},
  };
  return r;
}

}  // namespace

std::vector<int> suite_criteria(const std::string& suite) {
  if (suite == "acceptance") {
    std::vector<int> ids;
    for (const auto& [id, c] : registry()) ids.push_back(id);
    return ids;
  }
  if (suite == "quick") return {1, 6, 7, 13};
  throw Error("unknown suite '" + suite + "' (acceptance or quick)");
}

CriterionResult run_criterion(int id, const AcceptanceOptions& opt) {
  const auto it = registry().find(id);
  if (it == registry().end()) throw Error("unknown criterion " + std::to_string(id));
  CriterionResult r;
  r.id = id;
  r.title = it->second.title;
  const auto start = std::chrono::steady_clock::now();
  try {
    const Outcome o = it->second.fn(opt);
    r.pass = o.pass;
    r.detail = o.detail;
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = std::string("error: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::string format_result(const CriterionResult& r) {
  char head[96];
  std::snprintf(head, sizeof head, "criterion %2d  %s  ", r.id, r.pass ? "PASS" : "FAIL");
  return head + r.title + "  (" + r.detail + "; " + fmt(r.seconds) + " s)";
}

}  // namespace mmflow
