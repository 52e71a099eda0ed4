#pragma once

// Run configurations: the INI-style format read by the command-line tool and
// the versioned presets.

#include "mmflow/atw.hpp"
#include "mmflow/core.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mmflow {

/// Every problem found while parsing, one message per key.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  std::vector<std::string> problems;
};

struct DiskSpec {
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
};

struct RectangleSpec {
  Vec2 lo = Vec2::Zero();
  Vec2 hi = Vec2::Zero();
};

struct InitialSpec {
  enum class Profile { Indicator, Cone };

  std::vector<DiskSpec> disks;
  std::vector<RectangleSpec> rectangles;
  int blobs = 0;  // random disks, drawn with blobSeed
  double blobRmin = 0.05;
  double blobRmax = 0.12;
  unsigned long blobSeed = 1;
  std::filesystem::path raster;  // P5 PGM, resolved against the config file
  int threshold = 128;

  Profile profile = Profile::Indicator;
  /// Cone profile u = clamp(-slope * sd_E, 0, 1).
  double slope = 10.0;

  /// A single disk and nothing else: radius curves apply.
  bool single_disk() const {
    return disks.size() == 1 && rectangles.empty() && blobs == 0 && raster.empty();
  }
};

struct OutputSpec {
  int frameStride = 10;  // 0 disables frames
  std::string prefix = "frame";
};

struct CheckSpec {
  double radiusTolerance = -1;  // cells; < 0 disables the radius check
  double radiusUntil = kInf;    // compare only for t <= radiusUntil
  double anisometryMax = kInf;
  bool barrier = false;
  double barrierSlack = 2.0;  // cells
  bool fd = false;
  int fdSamples = 10;
  double fdHausdorff = 4.0;  // cells; < 0 disables
  double fdRadius = -1;      // cells; < 0 disables
  bool commute = false;
  int commuteStride = 1;
  bool modulus = false;
  bool fattening = false;
  bool refinement = false;
  bool monotone = true;      // activated by NegativePart
  bool displacement = true;  // activated by bounded G
};

struct RunConfig {
  Grid grid;
  PerimeterModel J;
  Anisotropy psi;
  Nonlinearity G;
  Forcing f;
  SchemeParams scheme;
  InitialSpec initial;
  OutputSpec output;
  CheckSpec checks;
  std::string name;  // preset name or config file stem
  std::string text;  // the parsed source, echoed in reports

  StepContext context() const;
};

/// Parses the key-value text. `base` resolves relative raster paths.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base = {});
RunConfig load_config(const std::filesystem::path& file);

/// Preset directory: $MMFLOW_PRESET_DIR if set, else the source tree copy.
std::filesystem::path preset_dir();
std::vector<std::string> preset_names();
/// Throws Error for unknown names.
RunConfig preset(const std::string& name);

/// The initial level function (0/1 for Indicator profiles).
LevelFunction initial_function(const RunConfig& cfg);
CellSet initial_set(const RunConfig& cfg);

/// Thread count from --threads, then MMFLOW_THREADS, then 1.
int resolve_threads(std::optional<int> flag);

}  // namespace mmflow
