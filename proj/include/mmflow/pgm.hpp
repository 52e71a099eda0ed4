#pragma once

// Binary PGM (P5, maxval 255) frames. Pixel column x is cell i, row y is
// cell j.

#include "mmflow/core.hpp"

#include <filesystem>

namespace mmflow {

using Image = Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic>;  // (i, j) -> 0..255

Image read_pgm(const std::filesystem::path& file);
void write_pgm(const std::filesystem::path& file, const Image& img);

/// 0 outside, 255 inside.
Image set_image(const CellSet& e);
/// Linear map of [floorValue, ceilValue] onto 0..255, rounded to nearest.
Image function_image(const LevelFunction& u);

}  // namespace mmflow
