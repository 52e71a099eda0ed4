#include "mmflow/config.hpp"
#include "mmflow/pgm.hpp"
#include "mmflow/run.hpp"

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace mmflow;

namespace {

const char* kMinimal = R"(
[grid]
nx = 48
ny = 48
dx = 0.02083333333333333

[scheme]
h = 0.004
T = 0.02

[initial]
disks = 0.5, 0.5, 0.25
)";

std::vector<std::string> problems(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.problems;
  }
  return {};
}

bool mentions(const std::vector<std::string>& ps, const std::string& key) {
  for (const auto& p : ps)
    if (p.find(key) != std::string::npos) return true;
  return false;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("mmflow_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("minimal config takes the documented defaults") {
  const auto cfg = parse_config(kMinimal);
  CHECK(cfg.scheme.levelCount == 64);
  CHECK(cfg.scheme.minimizerChoice == MinimizerChoice::Minimal);
  CHECK(cfg.scheme.margin == 8);
  CHECK(cfg.J.kind == PerimeterModel::Kind::LocalCrofton);
  CHECK(cfg.J.neighborhood == 16);
  CHECK(cfg.G.kind == Nonlinearity::Kind::Identity);
  CHECK(cfg.f.kind == Forcing::Kind::Zero);
  CHECK(cfg.initial.single_disk());
  CHECK(cfg.scheme.steps() == 5);
}

TEST_CASE("errors name the offending keys") {
  std::string bad = kMinimal;
  bad.replace(bad.find("h = 0.004"), 9, "h = -1");
  CHECK(mentions(problems(bad), "scheme.h"));

  CHECK(mentions(problems(std::string(kMinimal) + "[nonlinearity]\nkind = clamp\n"), "nonlinearity.M"));
  CHECK(mentions(problems(std::string(kMinimal) + "[nonlinearity]\nkind = power\n"), "nonlinearity.gamma"));
  CHECK(mentions(problems(std::string(kMinimal) + "[output]\ncolour = red\n"), "output.colour"));
  CHECK(mentions(problems(std::string(kMinimal) + "[extras]\na = 1\n"), "extras"));
  CHECK(mentions(problems("[grid]\nnx = 8\nny = 8\ndx = 1\n[initial]\ndisks = 4,4,1\n"), "scheme: missing section"));
  CHECK(mentions(problems(std::string(kMinimal) + "[perimeter]\nmodel = fractional\n"), "perimeter.s"));
  CHECK(mentions(problems(std::string(kMinimal) + "[checks]\nfd = maybe\n"), "checks.fd"));

  // Several problems are reported together.
  std::string two = kMinimal;
  two.replace(two.find("h = 0.004"), 9, "h = x");
  two += "[anisotropy]\nkind = round\n";
  const auto ps = problems(two);
  CHECK(mentions(ps, "scheme.h"));
  CHECK(mentions(ps, "anisotropy.kind"));

  // Clamp growth must fit inside the margin band.
  std::string clamp = kMinimal;
  clamp.replace(clamp.find("h = 0.004"), 9, "h = 0.1");
  clamp.replace(clamp.find("T = 0.02"), 8, "T = 0.2");
  clamp += "[nonlinearity]\nkind = clamp\nM = 50\n";
  CHECK(mentions(problems(clamp), "grid.margin"));
}

TEST_CASE("presets load and unknown names fail") {
  const auto names = preset_names();
  for (const char* n : {"shrink-disk-identity", "clamp-speed-bound", "fractional-barrier"})
    CHECK(std::find(names.begin(), names.end(), n) != names.end());
  for (const auto& n : names) CHECK_NOTHROW(preset(n));
  const auto disk = preset("shrink-disk-identity");
  CHECK(disk.grid.nx == 256);
  CHECK(disk.grid.dx == 1.0 / 128);
  CHECK(disk.scheme.h == 5e-4);
  CHECK(preset("fractional-barrier").J.kind == PerimeterModel::Kind::FractionalKernel);
  CHECK_THROWS_AS(preset("no-such-preset"), Error);
}

TEST_CASE("thread count resolution") {
  CHECK(resolve_threads(3) == 3);
  CHECK_THROWS_AS(resolve_threads(0), Error);
  ::setenv("MMFLOW_THREADS", "5", 1);
  CHECK(resolve_threads(std::nullopt) == 5);
  ::setenv("MMFLOW_THREADS", "five", 1);
  CHECK_THROWS_AS(resolve_threads(std::nullopt), Error);
  ::unsetenv("MMFLOW_THREADS");
  CHECK(resolve_threads(std::nullopt) == 1);
}

TEST_CASE("pgm round trip and raster initial conditions") {
  const auto dir = scratch("pgm");
  Image img(7, 5);
  for (int j = 0; j < 5; ++j)
    for (int i = 0; i < 7; ++i) img(i, j) = (i * 37 + j * 11) % 256;
  write_pgm(dir / "a.pgm", img);
  CHECK((read_pgm(dir / "a.pgm") == img).all());
  CHECK(slurp(dir / "a.pgm").rfind("P5\n7 5\n255\n", 0) == 0);

  const Grid g(48, 48, 1.0 / 48);
  const auto disk = make_disk(g, Vec2(0.5, 0.5), 0.2);
  write_pgm(dir / "disk.pgm", set_image(disk));
  const std::string text = "[grid]\nnx = 48\nny = 48\ndx = 0.020833333333333332\n"
                           "[scheme]\nh = 0.004\nT = 0.008\n[initial]\nraster = disk.pgm\n";
  std::ofstream(dir / "raster.ini") << text;
  CHECK(initial_set(load_config(dir / "raster.ini")) == disk);

  std::ofstream(dir / "bad.pgm") << "P2\n1 1\n255\n0\n";
  CHECK_THROWS_AS(read_pgm(dir / "bad.pgm"), Error);
}

TEST_CASE("runs are deterministic and report their checks") {
  std::string text = kMinimal;
  text += "[output]\nframe_stride = 2\nprefix = disk\n[checks]\nbarrier = true\nradius_tolerance = 100\n";
  const auto cfg = parse_config(text);
  const auto a = scratch("run_a"), b = scratch("run_b");
  RunOptions oa, ob;
  oa.out = a;
  ob.out = b;
  ob.threads = 3;
  const auto ra = run(cfg, oa);
  run(cfg, ob);
  for (const auto& entry : std::filesystem::directory_iterator(a))
    CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
  for (const char* f : {"disk_000.pgm", "disk_001.pgm", "disk_003.pgm", "disk_frames.csv", "radius.csv",
                        "displacement.csv", "report.txt"})
    CHECK(std::filesystem::exists(a / f));
  CHECK(ra.frames.size() == 4);  // steps 0, 2, 4 and the final step 5
  CHECK(slurp(a / "radius.csv").rfind("t,r_measured,r_exact,r_barrier\n0,", 0) == 0);
  CHECK(ra.check("barrier") != nullptr);
  CHECK(ra.check("radius") != nullptr);
  CHECK(ra.check("displacement") == nullptr);  // identity is unbounded
  const std::string report = slurp(a / "report.txt");
  CHECK(report.find("checks:\n  radius:\n    verdict: ") != std::string::npos);
  CHECK(report.find("verdict: " + std::string(ra.ok() ? "PASS" : "FAIL")) != std::string::npos);
}

TEST_CASE("bounded and shrinking flows activate their checks") {
  std::string text = kMinimal;
  text += "[nonlinearity]\nkind = clamp\nM = 2\n";
  const auto rep = run(parse_config(text));
  REQUIRE(rep.check("displacement") != nullptr);
  CHECK(rep.check("displacement")->pass);
  CHECK(rep.check("monotone") == nullptr);

  std::string shrink = kMinimal;
  shrink += "[nonlinearity]\nkind = negative_part\n[forcing]\nkind = constant\nvalue = 3\n";
  const auto rs = run(parse_config(shrink));
  REQUIRE(rs.check("monotone") != nullptr);
  CHECK(rs.check("monotone")->pass);
}

TEST_CASE("margin breaches are reported with step and level") {
  std::string text = kMinimal;
  text.replace(text.find("disks = 0.5, 0.5, 0.25"), 22, "disks = 0.5, 0.5, 0.3");
  text += "[forcing]\nkind = constant\nvalue = 40\n";
  const auto rep = run(parse_config(text));
  CHECK_FALSE(rep.ok());
  CHECK(rep.error.find("margin breach at step") != std::string::npos);
  CHECK(rep.error.find("level") != std::string::npos);
}
