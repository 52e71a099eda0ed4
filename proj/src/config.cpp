#include "mmflow/config.hpp"

#include "mmflow/distance.hpp"
#include "mmflow/pgm.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cstring>
#include <cstdlib>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace mmflow {

namespace pt = boost::property_tree;

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : "\n") + s;
  return out;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string part;
  std::istringstream is(s);
  while (std::getline(is, part, sep))
    if (!trim(part).empty()) out.push_back(trim(part));
  return out;
}

const std::map<std::string, std::set<std::string>> kKeys = {
    {"grid", {"nx", "ny", "dx", "origin", "margin"}},
    {"perimeter", {"model", "neighborhood", "s", "cutoff"}},
    {"anisotropy", {"kind", "weights"}},
    {"nonlinearity", {"kind", "M", "gamma", "knots"}},
    {"forcing", {"kind", "value", "times", "values"}},
    {"scheme", {"h", "T", "levels", "minimizer"}},
    {"initial",
     {"disks", "rectangles", "blobs", "blob_rmin", "blob_rmax", "blob_seed", "raster", "threshold",
      "profile", "slope"}},
    {"output", {"frame_stride", "prefix"}},
    {"checks",
     {"radius_tolerance", "radius_until", "anisometry_max", "barrier", "barrier_slack", "fd",
      "fd_samples", "fd_hausdorff", "fd_radius", "commute", "commute_stride", "modulus",
      "fattening", "refinement", "monotone", "displacement"}},
};

// Typed access with per-key error collection.
class Reader {
 public:
  Reader(const pt::ptree& tree, std::vector<std::string>& errors) : tree_(tree), errors_(errors) {}

  bool has_section(const std::string& sec) const { return tree_.get_child_optional(sec).has_value(); }

  std::optional<std::string> raw(const std::string& sec, const std::string& key) const {
    const auto v = tree_.get_optional<std::string>(pt::ptree::path_type(sec + "/" + key, '/'));
    if (!v) return std::nullopt;
    return trim(*v);
  }

  template <typename T>
  T get(const std::string& sec, const std::string& key, T fallback) {
    const auto r = raw(sec, key);
    if (!r) return fallback;
    T value{};
    if (!parse(*r, value)) {
      errors_.push_back(sec + "." + key + ": cannot parse '" + *r + "'");
      return fallback;
    }
    return value;
  }

  template <typename T>
  T require(const std::string& sec, const std::string& key) {
    if (!raw(sec, key)) {
      errors_.push_back(sec + "." + key + ": required");
      return T{};
    }
    return get<T>(sec, key, T{});
  }

  std::vector<double> numbers(const std::string& sec, const std::string& key) {
    std::vector<double> out;
    const auto r = raw(sec, key);
    if (!r) return out;
    for (const auto& part : split(*r, ',')) {
      double v;
      if (!parse(part, v)) {
        errors_.push_back(sec + "." + key + ": cannot parse '" + part + "'");
        return {};
      }
      out.push_back(v);
    }
    return out;
  }

  // Semicolon-separated groups of `width` comma-separated numbers.
  std::vector<std::vector<double>> groups(const std::string& sec, const std::string& key,
                                          size_t width) {
    std::vector<std::vector<double>> out;
    const auto r = raw(sec, key);
    if (!r) return out;
    for (const auto& grp : split(*r, ';')) {
      std::vector<double> g;
      for (const auto& part : split(grp, ',')) {
        double v;
        if (!parse(part, v)) {
          errors_.push_back(sec + "." + key + ": cannot parse '" + part + "'");
          return {};
        }
        g.push_back(v);
      }
      if (g.size() != width) {
        errors_.push_back(sec + "." + key + ": each entry needs " + std::to_string(width) +
                          " numbers");
        return {};
      }
      out.push_back(g);
    }
    return out;
  }

  void fail(const std::string& msg) { errors_.push_back(msg); }

 private:
  static bool parse(const std::string& s, std::string& v) {
    v = s;
    return true;
  }
  static bool parse(const std::string& s, bool& v) {
    if (s == "true" || s == "yes" || s == "1") v = true;
    else if (s == "false" || s == "no" || s == "0") v = false;
    else return false;
    return true;
  }
  template <typename N>
  static bool parse(const std::string& s, N& v) {
    if constexpr (std::is_floating_point_v<N>) {
      char* end = nullptr;
      v = std::strtod(s.c_str(), &end);
      return !s.empty() && end == s.c_str() + s.size();
    } else {
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      return ec == std::errc() && p == s.data() + s.size();
    }
  }

  const pt::ptree& tree_;
  std::vector<std::string>& errors_;
};

void check_keys(const pt::ptree& tree, std::vector<std::string>& errors) {
  for (const auto& [sec, child] : tree) {
    const auto it = kKeys.find(sec);
    if (it == kKeys.end()) {
      errors.push_back(sec + ": unknown section");
      continue;
    }
    for (const auto& [key, value] : child)
      if (!it->second.count(key)) errors.push_back(sec + "." + key + ": unknown key");
  }
}

// Runs a factory that may throw Error and records the message under `key`.
template <typename F>
auto guarded(std::vector<std::string>& errors, const std::string& key, F&& make)
    -> decltype(make()) {
  try {
    return make();
  } catch (const Error& e) {
    errors.push_back(key + ": " + e.what());
    return {};
  }
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> p) : Error(join(p)), problems(std::move(p)) {}

StepContext RunConfig::context() const {
  StepContext c;
  c.J = J;
  c.psi = psi;
  c.G = G;
  c.f = f;
  c.h = scheme.h;
  c.margin = scheme.margin;
  return c;
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base) {
  pt::ptree tree;
  try {
    std::istringstream is(text);
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError({std::string("syntax: ") + e.message() + " (line " +
                       std::to_string(e.line()) + ")"});
  }

  std::vector<std::string> errors;
  check_keys(tree, errors);
  Reader r(tree, errors);
  RunConfig cfg;
  cfg.text = text;

  for (const char* sec : {"grid", "scheme", "initial"})
    if (!r.has_section(sec)) errors.push_back(std::string(sec) + ": missing section");

  // grid
  {
    const int nx = r.require<int>("grid", "nx"), ny = r.require<int>("grid", "ny");
    const double dx = r.require<double>("grid", "dx");
    const auto origin = r.numbers("grid", "origin");
    if (!origin.empty() && origin.size() != 2) r.fail("grid.origin: needs two numbers");
    const Vec2 o = origin.size() == 2 ? Vec2(origin[0], origin[1]) : Vec2::Zero();
    cfg.grid = guarded(errors, "grid", [&] { return Grid(nx, ny, dx, o); });
    cfg.scheme.margin = r.get<int>("grid", "margin", 8);
  }

  // perimeter
  {
    const auto model = r.get<std::string>("perimeter", "model", "crofton");
    if (model == "crofton") {
      const int nb = r.get<int>("perimeter", "neighborhood", 16);
      cfg.J = guarded(errors, "perimeter.neighborhood",
                      [&] { return PerimeterModel::local_crofton(nb); });
    } else if (model == "fractional") {
      const double s = r.require<double>("perimeter", "s");
      const int cutoff = r.require<int>("perimeter", "cutoff");
      if (errors.empty())
        cfg.J = guarded(errors, "perimeter",
                        [&] { return PerimeterModel::fractional(s, cutoff, cfg.grid.dx); });
    } else {
      r.fail("perimeter.model: must be crofton or fractional");
    }
  }

  // anisotropy
  {
    const auto kind = r.get<std::string>("anisotropy", "kind", "euclidean");
    if (kind == "euclidean") {
      cfg.psi = Anisotropy::euclidean();
    } else if (kind == "maxnorm") {
      cfg.psi = Anisotropy::max_norm();
    } else if (kind == "weighted") {
      const auto w = r.numbers("anisotropy", "weights");
      if (w.size() != 2)
        r.fail("anisotropy.weights: weighted anisotropy needs two weights");
      else
        cfg.psi = guarded(errors, "anisotropy.weights", [&] { return Anisotropy::weighted(w[0], w[1]); });
    } else {
      r.fail("anisotropy.kind: must be euclidean, maxnorm or weighted");
    }
  }

  // nonlinearity
  {
    const auto kind = r.get<std::string>("nonlinearity", "kind", "identity");
    if (kind == "identity") {
      cfg.G = Nonlinearity::identity();
    } else if (kind == "clamp") {
      if (!r.raw("nonlinearity", "M"))
        r.fail("nonlinearity.M: clamp requires the bound M");
      else {
        const double m = r.get<double>("nonlinearity", "M", 1.0);
        cfg.G = guarded(errors, "nonlinearity.M", [&] { return Nonlinearity::clamp(m); });
      }
    } else if (kind == "power") {
      if (!r.raw("nonlinearity", "gamma"))
        r.fail("nonlinearity.gamma: power requires the exponent gamma");
      else {
        const double gm = r.get<double>("nonlinearity", "gamma", 1.0);
        cfg.G = guarded(errors, "nonlinearity.gamma", [&] { return Nonlinearity::power(gm); });
      }
    } else if (kind == "negative_part") {
      cfg.G = Nonlinearity::negative_part();
    } else if (kind == "piecewise") {
      std::vector<Vec2> knots;
      for (const auto& k : r.groups("nonlinearity", "knots", 2)) knots.emplace_back(k[0], k[1]);
      if (knots.empty())
        r.fail("nonlinearity.knots: piecewise requires knots");
      else
        cfg.G = guarded(errors, "nonlinearity.knots", [&] { return Nonlinearity::piecewise(knots); });
    } else {
      r.fail("nonlinearity.kind: must be identity, clamp, power, negative_part or piecewise");
    }
  }

  // forcing
  {
    const auto kind = r.get<std::string>("forcing", "kind", "zero");
    if (kind == "zero") {
      cfg.f = Forcing::zero();
    } else if (kind == "constant") {
      cfg.f = Forcing::constant(r.require<double>("forcing", "value"));
    } else if (kind == "sampled") {
      auto t = r.numbers("forcing", "times");
      auto v = r.numbers("forcing", "values");
      cfg.f = guarded(errors, "forcing", [&] { return Forcing::sampled(t, v); });
    } else {
      r.fail("forcing.kind: must be zero, constant or sampled");
    }
  }

  // scheme
  {
    cfg.scheme.h = r.require<double>("scheme", "h");
    cfg.scheme.T = r.require<double>("scheme", "T");
    cfg.scheme.levelCount = r.get<int>("scheme", "levels", 64);
    const auto choice = r.get<std::string>("scheme", "minimizer", "minimal");
    if (choice == "minimal")
      cfg.scheme.minimizerChoice = MinimizerChoice::Minimal;
    else if (choice == "maximal")
      cfg.scheme.minimizerChoice = MinimizerChoice::Maximal;
    else
      r.fail("scheme.minimizer: must be minimal or maximal");
  }

  // initial
  {
    auto& in = cfg.initial;
    for (const auto& d : r.groups("initial", "disks", 3)) {
      if (!(d[2] > 0)) r.fail("initial.disks: radius must be positive");
      in.disks.push_back({Vec2(d[0], d[1]), d[2]});
    }
    for (const auto& q : r.groups("initial", "rectangles", 4)) {
      if (!(q[2] >= q[0] && q[3] >= q[1])) r.fail("initial.rectangles: need lo <= hi");
      in.rectangles.push_back({Vec2(q[0], q[1]), Vec2(q[2], q[3])});
    }
    in.blobs = r.get<int>("initial", "blobs", 0);
    in.blobRmin = r.get<double>("initial", "blob_rmin", in.blobRmin);
    in.blobRmax = r.get<double>("initial", "blob_rmax", in.blobRmax);
    in.blobSeed = r.get<unsigned long>("initial", "blob_seed", in.blobSeed);
    if (in.blobs < 0) r.fail("initial.blobs: must be >= 0");
    if (in.blobs > 0 && !(in.blobRmin > 0 && in.blobRmax >= in.blobRmin))
      r.fail("initial.blob_rmin: need 0 < blob_rmin <= blob_rmax");
    if (const auto path = r.raw("initial", "raster")) {
      in.raster = *path;
      if (in.raster.is_relative() && !base.empty()) in.raster = base / in.raster;
    }
    in.threshold = r.get<int>("initial", "threshold", in.threshold);
    const auto profile = r.get<std::string>("initial", "profile", "indicator");
    if (profile == "indicator")
      in.profile = InitialSpec::Profile::Indicator;
    else if (profile == "cone")
      in.profile = InitialSpec::Profile::Cone;
    else
      r.fail("initial.profile: must be indicator or cone");
    in.slope = r.get<double>("initial", "slope", in.slope);
    if (!(in.slope > 0)) r.fail("initial.slope: must be positive");
    if (r.has_section("initial") && in.disks.empty() && in.rectangles.empty() && in.blobs == 0 &&
        in.raster.empty())
      r.fail("initial: needs disks, rectangles, blobs or raster");
  }

  // output
  cfg.output.frameStride = r.get<int>("output", "frame_stride", cfg.output.frameStride);
  cfg.output.prefix = r.get<std::string>("output", "prefix", cfg.output.prefix);
  if (cfg.output.frameStride < 0) r.fail("output.frame_stride: must be >= 0");
  if (cfg.output.prefix.empty() || cfg.output.prefix.find('/') != std::string::npos)
    r.fail("output.prefix: must be a plain file name");

  // checks
  {
    auto& c = cfg.checks;
    c.radiusTolerance = r.get<double>("checks", "radius_tolerance", c.radiusTolerance);
    c.radiusUntil = r.get<double>("checks", "radius_until", c.radiusUntil);
    c.anisometryMax = r.get<double>("checks", "anisometry_max", c.anisometryMax);
    c.barrier = r.get<bool>("checks", "barrier", c.barrier);
    c.barrierSlack = r.get<double>("checks", "barrier_slack", c.barrierSlack);
    c.fd = r.get<bool>("checks", "fd", c.fd);
    c.fdSamples = r.get<int>("checks", "fd_samples", c.fdSamples);
    c.fdHausdorff = r.get<double>("checks", "fd_hausdorff", c.fdHausdorff);
    c.fdRadius = r.get<double>("checks", "fd_radius", c.fdRadius);
    c.commute = r.get<bool>("checks", "commute", c.commute);
    c.commuteStride = r.get<int>("checks", "commute_stride", c.commuteStride);
    c.modulus = r.get<bool>("checks", "modulus", c.modulus);
    c.fattening = r.get<bool>("checks", "fattening", c.fattening);
    c.refinement = r.get<bool>("checks", "refinement", c.refinement);
    c.monotone = r.get<bool>("checks", "monotone", c.monotone);
    c.displacement = r.get<bool>("checks", "displacement", c.displacement);
    if (c.fd && c.fdSamples < 1) r.fail("checks.fd_samples: must be >= 1");
    if (c.commuteStride < 1) r.fail("checks.commute_stride: must be >= 1");
    const bool needs_disk = c.radiusTolerance >= 0 || c.barrier || c.fd;
    if (needs_disk && !cfg.initial.single_disk())
      r.fail("checks: radius, barrier and fd checks need a single disk in initial.disks");
    if (c.fd && !(cfg.G.kind == Nonlinearity::Kind::Identity ||
                  cfg.G.kind == Nonlinearity::Kind::Clamp))
      r.fail("checks.fd: the finite-difference reference supports identity and clamp only");
  }

  if (errors.empty()) {
    try {
      cfg.scheme.validate(cfg.grid, cfg.G);
    } catch (const Error& e) {
      errors.push_back(e.what());
    }
  }
  if (!errors.empty()) throw ConfigError(errors);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw Error("cannot read config " + file.string());
  std::stringstream ss;
  ss << is.rdbuf();
  auto cfg = parse_config(ss.str(), file.parent_path());
  cfg.name = file.stem().string();
  return cfg;
}

std::filesystem::path preset_dir() {
  if (const char* env = std::getenv("MMFLOW_PRESET_DIR"); env && *env) return env;
  return MMFLOW_DEFAULT_PRESET_DIR;
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  const auto dir = preset_dir();
  if (!std::filesystem::is_directory(dir)) return names;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.path().extension() == ".ini") names.push_back(e.path().stem().string());
  std::sort(names.begin(), names.end());
  return names;
}

RunConfig preset(const std::string& name) {
  const auto names = preset_names();
  if (std::find(names.begin(), names.end(), name) == names.end())
    throw Error("unknown preset '" + name + "' (looked in " + preset_dir().string() + ")");
  return load_config(preset_dir() / (name + ".ini"));
}

CellSet initial_set(const RunConfig& cfg) {
  const Grid& g = cfg.grid;
  const auto& in = cfg.initial;
  CellSet e(g);
  for (const auto& d : in.disks) e = e | make_disk(g, d.center, d.radius);
  for (const auto& q : in.rectangles) e = e | make_rectangle(g, q.lo, q.hi);
  if (in.blobs > 0) {
    std::mt19937_64 rng(in.blobSeed);
    std::uniform_real_distribution<double> rad(in.blobRmin, in.blobRmax);
    const int m = cfg.scheme.margin + 2;
    for (int b = 0; b < in.blobs; ++b) {
      const double r = rad(rng);
      const Vec2 lo = g.center(m, m) + Vec2(r, r), hi = g.center(g.nx - 1 - m, g.ny - 1 - m) - Vec2(r, r);
      if (!(hi(0) > lo(0) && hi(1) > lo(1))) throw Error("initial.blob_rmax: blobs do not fit the grid");
      std::uniform_real_distribution<double> ux(lo(0), hi(0)), uy(lo(1), hi(1));
      const double cx = ux(rng), cy = uy(rng);
      e = e | make_disk(g, Vec2(cx, cy), r);
    }
  }
  if (!in.raster.empty()) {
    const auto img = read_pgm(in.raster);
    if (img.rows() != g.nx || img.cols() != g.ny)
      throw Error("initial.raster: image size does not match grid.nx x grid.ny");
    e = e | CellSet(g, img >= in.threshold);
  }
  return e;
}

LevelFunction initial_function(const RunConfig& cfg) {
  const CellSet e = initial_set(cfg);
  const Grid& g = cfg.grid;
  if (cfg.initial.profile == InitialSpec::Profile::Indicator)
    return LevelFunction(g, e.mask.cast<double>(), 0.0, 1.0);
  if (e.empty()) return LevelFunction(g, Field::Zero(g.nx, g.ny), 0.0, 1.0);
  const auto sd = signed_distance(e, Anisotropy::euclidean());
  return LevelFunction(g, (-cfg.initial.slope * sd.values).cwiseMax(0.0).cwiseMin(1.0), 0.0, 1.0);
}

int resolve_threads(std::optional<int> flag) {
  if (flag) {
    if (*flag < 1) throw Error("--threads: must be >= 1");
    return *flag;
  }
  if (const char* env = std::getenv("MMFLOW_THREADS"); env && *env) {
    int n = 0;
    const auto [p, ec] = std::from_chars(env, env + std::strlen(env), n);
    if (ec != std::errc() || *p != '\0' || n < 1) throw Error("MMFLOW_THREADS: must be a positive integer");
    return n;
  }
  return 1;
}

}  // namespace mmflow
