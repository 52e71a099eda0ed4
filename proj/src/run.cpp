#include "mmflow/run.hpp"

#include "mmflow/oracles.hpp"
#include "mmflow/pgm.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace mmflow {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// The set whose radius and interface are tracked: {u >= first level}.
CellSet tracked_set(const LevelFunction& u, int L) {
  return CellSet(u.grid, u.values >= uniform_levels(u.floorValue, u.ceilValue, L).front());
}

bool classical_ball_law(const RunConfig& cfg) {
  return cfg.J.kind == PerimeterModel::Kind::LocalCrofton && cfg.psi.isotropic();
}

CheckResult upper_check(std::string name, double worst, double tol, std::string unit,
                        std::string detail = {}) {
  return {std::move(name), worst <= tol, worst, tol, std::move(unit), std::move(detail)};
}

void write_csv(const std::filesystem::path& file, const std::string& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw Error("cannot write " + file.string());
  os << header << '\n';
  for (const auto& r : rows) {
    for (size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << num(r[c]);
    os << '\n';
  }
}

}  // namespace

bool RunReport::ok() const {
  if (!error.empty()) return false;
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

const CheckResult* RunReport::check(const std::string& n) const {
  for (const auto& c : checks)
    if (c.name == n) return &c;
  return nullptr;
}

RunReport run(const RunConfig& cfg, const RunOptions& opt) {
  const Grid& g = cfg.grid;
  const StepContext ctx = cfg.context();
  const int L = cfg.scheme.levelCount;
  const double h = cfg.scheme.h;
  const long steps = cfg.scheme.steps();
  const auto& chk = cfg.checks;

  RunReport rep;
  rep.name = cfg.name;
  rep.configText = cfg.text;
  rep.steps = steps;

  if (opt.out) std::filesystem::create_directories(*opt.out);

  LiftOptions lift;
  lift.levelCount = L;
  lift.choice = cfg.scheme.minimizerChoice;
  lift.threads = opt.threads;

  const LevelFunction u0 = initial_function(cfg);
  LevelFunction u = u0;

  // Frames and their sidecar.
  std::ostringstream sidecar;
  sidecar << "frame,time,file,floor,ceil\n";
  auto emit_frame = [&](long k) {
    char name[64];
    std::snprintf(name, sizeof name, "%s_%03zu.pgm", cfg.output.prefix.c_str(), rep.frames.size());
    if (opt.out) write_pgm(*opt.out / name, function_image(u));
    sidecar << rep.frames.size() << ',' << num(k * h) << ',' << name << ',' << num(u.floorValue)
            << ',' << num(u.ceilValue) << '\n';
    rep.frames.emplace_back(name);
  };
  const int stride = cfg.output.frameStride;
  if (stride > 0) emit_frame(0);

  // Disk bookkeeping.
  const bool disk = cfg.initial.single_disk();
  const double r0 = disk ? cfg.initial.disks.front().radius : 0.0;
  const bool exact_law = disk && classical_ball_law(cfg);
  double barrier = r0;
  auto radius_row = [&](double t, const CellSet& e) {
    RadiusRow row;
    row.t = t;
    if (!e.empty()) {
      const auto m = measure_radius(e);
      row.measured = m.radius;
      row.anisometry = m.anisometry;
    }
    row.exact = exact_law ? exact_ball_radius(cfg.G, cfg.f, r0, t) : std::nan("");
    row.barrier = barrier;
    return row;
  };
  if (disk) rep.radius.push_back(radius_row(0.0, tracked_set(u, L)));

  // FD sample steps.
  std::vector<long> fd_steps;
  if (chk.fd)
    for (int m = 1; m <= chk.fdSamples; ++m)
      fd_steps.push_back(std::max(1L, std::lround(static_cast<double>(m) * steps / chk.fdSamples)));
  fd_steps.erase(std::unique(fd_steps.begin(), fd_steps.end()), fd_steps.end());
  std::vector<CellSet> fd_mms;

  // Per-level set evolutions for the commutation check.
  std::vector<double> levels = uniform_levels(u0.floorValue, u0.ceilValue, L);
  std::vector<size_t> commute_levels;
  std::vector<PhaseSet> commute_sets;
  long commute_mismatch = 0, commute_moved = 0;
  if (chk.commute) {
    const auto st = decompose(u0, L, cfg.scheme.margin);
    for (size_t i = 0; i < st.sets.size(); i += chk.commuteStride) {
      commute_levels.push_back(i);
      commute_sets.push_back(st.sets[i]);
    }
  }

  const bool shrinking = cfg.G.b() == 0.0;
  long monotone_violations = 0;
  EvolutionRecord record;  // snapshots at frame stride, for the modulus check
  record.times.push_back(0.0);
  record.snapshots.push_back(u0);

  try {
    for (long k = 0; k < steps; ++k) {
      const LevelStack before = decompose(u, L, cfg.scheme.margin);
      const LevelStack after = lift_stack(before, ctx, k, lift);
      double disp = 0.0;
      for (size_t i = 0; i < before.sets.size(); ++i) {
        if (i > 0 && before.sets[i].phase == before.sets[i - 1].phase &&
            before.sets[i].stored == before.sets[i - 1].stored)
          continue;
        disp = std::max(disp, interface_displacement(before.sets[i].cells(), after.sets[i].cells()));
      }
      rep.displacement.push_back(disp);
      LevelFunction next = reconstruct(after, g, u.floorValue, u.ceilValue);
      if (shrinking && !(next.values <= u.values).all()) ++monotone_violations;
      u = std::move(next);
      rep.stepsDone = k + 1;
      const double t = (k + 1) * h;

      if (!commute_sets.empty()) {
        for (size_t c = 0; c < commute_sets.size(); ++c) {
          if (!commute_sets[c].stored.empty()) {
            PhaseSet next_set = atw_step(commute_sets[c], ctx, k, lift.choice);
            if (!(next_set.stored == commute_sets[c].stored)) ++commute_moved;
            commute_sets[c] = std::move(next_set);
          }
          if (!(CellSet(g, u.values >= levels[commute_levels[c]]) == commute_sets[c].cells()))
            ++commute_mismatch;
        }
      }
      if (disk) {
        if (chk.barrier) {
          if (std::isfinite(cfg.G.a()))
            barrier = std::max(r0 - cfg.G.a() * t, 0.0);
          else if (barrier > 0)
            barrier = integrate_radius([&](double, double r) { return kappa_hat(r, ctx); }, barrier, h);
        }
        rep.radius.push_back(radius_row(t, tracked_set(u, L)));
      }
      if (std::find(fd_steps.begin(), fd_steps.end(), k + 1) != fd_steps.end())
        fd_mms.push_back(tracked_set(u, L));
      const bool frame = stride > 0 && ((k + 1) % stride == 0 || k + 1 == steps);
      if (frame) emit_frame(k + 1);
      if (chk.modulus && frame) {
        record.times.push_back(t);
        record.snapshots.push_back(u);
      }
    }
  } catch (const MarginBreach& e) {
    rep.error = e.what();
  } catch (const NestingViolation& e) {
    rep.error = e.what();
  }

  const double dx = g.dx;
  const bool finished = rep.error.empty();

  if (finished && std::isfinite(cfg.G.a()) && std::isfinite(cfg.G.b()) && chk.displacement) {
    const double bound = cfg.psi.c_psi() * std::max(cfg.G.a(), cfg.G.b()) * h + 2 * dx;
    const double worst = rep.displacement.empty() ? 0.0 : *std::max_element(rep.displacement.begin(), rep.displacement.end());
    const long moved = std::count_if(rep.displacement.begin(), rep.displacement.end(), [](double d) { return d > 0; });
    rep.checks.push_back(upper_check("displacement", worst, bound, "world",
                                     "per-step interface displacement vs c_psi max(a,b) h + 2 dx, " +
                                         std::to_string(moved) + " of " + std::to_string(rep.displacement.size()) +
                                         " steps moved"));
  }
  if (finished && shrinking && chk.monotone)
    rep.checks.push_back(upper_check(
        "monotone", static_cast<double>(monotone_violations), 0.0, "steps",
        "steps where u increased somewhere, " +
            std::to_string(std::count_if(rep.displacement.begin(), rep.displacement.end(), [](double d) { return d > 0; })) +
            " of " + std::to_string(rep.displacement.size()) + " steps moved"));
  if (finished && chk.commute)
    rep.checks.push_back(upper_check("commute", static_cast<double>(commute_mismatch), 0.0,
                                     "level-steps",
                                     std::to_string(commute_levels.size()) + " levels evolved as sets, " +
                                         std::to_string(commute_moved) + " of " +
                                         std::to_string(commute_levels.size() * rep.stepsDone) +
                                         " level-steps moved"));

  if (finished && disk && chk.radiusTolerance >= 0) {
    if (!exact_law) {
      rep.checks.push_back({"radius", false, kInf, chk.radiusTolerance, "cells",
                            "no closed ball law for this perimeter or anisotropy"});
    } else {
      double worst = 0.0, aniso = 1.0;
      for (const auto& r : rep.radius) {
        if (r.t > chk.radiusUntil + 1e-12) continue;
        worst = std::max(worst, std::abs(r.measured - r.exact) / dx);
        if (r.measured > 0) aniso = std::max(aniso, r.anisometry);
      }
      rep.checks.push_back(upper_check("radius", worst, chk.radiusTolerance, "cells",
                                       "|r_measured - r_exact| for t <= " + short_num(std::min(chk.radiusUntil, steps * h))));
      if (std::isfinite(chk.anisometryMax))
        rep.checks.push_back(upper_check("anisometry", aniso, chk.anisometryMax, "ratio"));
    }
  }
  if (finished && disk && chk.barrier) {
    double worst = -kInf;
    for (const auto& r : rep.radius) worst = std::max(worst, (r.barrier - r.measured) / dx);
    rep.checks.push_back(upper_check("barrier", worst, chk.barrierSlack, "cells",
                                     "barrier_radius - r_measured"));
  }
  if (finished && disk && chk.fd) {
    const Vec2 c = cfg.initial.disks.front().center;
    Field v(g.nx, g.ny);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) v(i, j) = std::max(-0.2, r0 - (g.center(i, j) - c).norm());
    std::vector<double> times;
    for (long s : fd_steps) times.push_back(s * h);
    const auto states = fd_reference_evolve(g, v, cfg.G, cfg.f, times);
    double worst_h = 0.0, worst_r = 0.0;
    for (size_t m = 0; m < states.size(); ++m) {
      const CellSet fd_set(g, states[m].u >= 0.0);
      FdRow row;
      row.t = times[m];
      row.hausdorff = boundary_hausdorff(fd_mms[m], fd_set);
      row.fdRadius = fd_set.empty() ? 0.0 : measure_radius(fd_set).radius;
      row.exact = exact_law ? exact_ball_radius(cfg.G, cfg.f, r0, row.t) : std::nan("");
      worst_h = std::max(worst_h, row.hausdorff / dx);
      if (exact_law) worst_r = std::max(worst_r, std::abs(row.fdRadius - row.exact) / dx);
      rep.fd.push_back(row);
    }
    if (chk.fdHausdorff >= 0)
      rep.checks.push_back(upper_check("fd_hausdorff", worst_h, chk.fdHausdorff, "cells",
                                       "zero-level Hausdorff distance, scheme vs finite differences"));
    if (chk.fdRadius >= 0)
      rep.checks.push_back(upper_check("fd_radius", worst_r, chk.fdRadius, "cells",
                                       "|r_fd - r_exact|"));
  }
  if (finished && chk.modulus) {
    const auto m = modulus_check(u0, record);
    rep.checks.push_back(upper_check("modulus", m.worstViolationCells, 1.0, "cells",
                                     "dilated superlevel containment, lipschitz " + short_num(m.lipschitz)));
  }
  if (finished && chk.refinement) {
    EvolveOptions eo;
    static_cast<LiftOptions&>(eo) = lift;
    const auto st = h_refinement_study(u0, ctx, {4 * h, 2 * h, h}, steps * h, eo);
    rep.refinement = st.rows;
    double rise = 0.0;
    for (size_t r = 1; r < st.rows.size(); ++r) rise = std::max(rise, st.rows[r].gap - st.rows[r - 1].gap);
    rep.checks.push_back(upper_check("refinement", rise, 0.0, "value",
                                     "largest increase of the gap to the finest run as h decreases, gaps " +
                                         short_num(st.rows[0].gap) + " / " + short_num(st.rows[1].gap) + " / " +
                                         short_num(st.rows[2].gap)));
  }
  if (finished && chk.fattening) {
    EvolveOptions eo;
    static_cast<LiftOptions&>(eo) = lift;
    const auto fr = fattening_report(u0, ctx, steps * h, eo);
    rep.fattening = fr.disagreeingCells;
    rep.checks.push_back({"fattening", true, static_cast<double>(fr.worst), kInf, "cells",
                          "reported only"});
  }

  if (opt.out) {
    const auto& dir = *opt.out;
    if (stride > 0) {
      std::ofstream os(dir / (cfg.output.prefix + "_frames.csv"), std::ios::binary);
      os << sidecar.str();
    }
    std::vector<std::vector<double>> rows;
    for (size_t k = 0; k < rep.displacement.size(); ++k)
      rows.push_back({static_cast<double>(k + 1), (k + 1) * h, rep.displacement[k]});
    write_csv(dir / "displacement.csv", "step,t,displacement", rows);
    if (disk) {
      rows.clear();
      for (const auto& r : rep.radius) rows.push_back({r.t, r.measured, r.exact, r.barrier});
      write_csv(dir / "radius.csv", "t,r_measured,r_exact,r_barrier", rows);
    }
    if (!rep.fd.empty()) {
      rows.clear();
      for (const auto& r : rep.fd) rows.push_back({r.t, r.hausdorff, r.fdRadius, r.exact});
      write_csv(dir / "fd.csv", "t,hausdorff,r_fd,r_exact", rows);
    }
    if (!rep.refinement.empty()) {
      rows.clear();
      for (const auto& r : rep.refinement) rows.push_back({r.h, r.gap});
      write_csv(dir / "refinement.csv", "h,gap", rows);
    }
    std::ofstream os(dir / "report.txt", std::ios::binary);
    write_report(os, rep);
  }
  return rep;
}

void write_report(std::ostream& os, const RunReport& rep) {
  os << "run: " << (rep.name.empty() ? "unnamed" : rep.name) << '\n';
  os << "config:\n";
  std::istringstream lines(rep.configText);
  for (std::string line; std::getline(lines, line);) {
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line[0] == '[')
      os << "  " << line.substr(1, line.find(']') - 1) << ":\n";
    else
      os << "    " << line << '\n';
  }
  os << "steps:\n";
  os << "  planned: " << rep.steps << '\n';
  os << "  completed: " << rep.stepsDone << '\n';
  if (!rep.displacement.empty())
    os << "  max_displacement: "
       << num(*std::max_element(rep.displacement.begin(), rep.displacement.end())) << '\n';
  os << "  frames: " << rep.frames.size() << '\n';
  if (!rep.error.empty()) os << "error: " << rep.error << '\n';
  if (!rep.radius.empty()) {
    const auto& last = rep.radius.back();
    os << "radius:\n";
    os << "  t: " << num(last.t) << '\n';
    os << "  measured: " << num(last.measured) << '\n';
    os << "  exact: " << num(last.exact) << '\n';
    os << "  barrier: " << num(last.barrier) << '\n';
  }
  if (!rep.fd.empty()) {
    os << "fd_series:\n";
    for (const auto& r : rep.fd) os << "  " << num(r.t) << ": " << num(r.hausdorff) << '\n';
  }
  if (!rep.refinement.empty()) {
    os << "refinement:\n";
    for (const auto& r : rep.refinement) os << "  " << num(r.h) << ": " << num(r.gap) << '\n';
  }
  if (!rep.fattening.empty()) {
    os << "fattening:\n";
    for (size_t s = 0; s < rep.fattening.size(); ++s) os << "  " << s << ": " << rep.fattening[s] << '\n';
  }
  os << "checks:\n";
  for (const auto& c : rep.checks) {
    os << "  " << c.name << ":\n";
    os << "    verdict: " << (c.pass ? "PASS" : "FAIL") << '\n';
    os << "    worst: " << num(c.worst) << '\n';
    os << "    tolerance: " << num(c.tolerance) << '\n';
    os << "    unit: " << c.unit << '\n';
    if (!c.detail.empty()) os << "    detail: " << c.detail << '\n';
  }
  os << "verdict: " << (rep.ok() ? "PASS" : "FAIL") << '\n';
}

}  // namespace mmflow
