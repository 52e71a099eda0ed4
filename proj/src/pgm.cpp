#include "mmflow/pgm.hpp"

#include <fstream>
#include <string>
#include <vector>

namespace mmflow {

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string token(std::istream& is) {
  std::string tok;
  for (;;) {
    const int c = is.get();
    if (c == EOF) break;
    if (c == '#' && tok.empty()) {
      std::string rest;
      std::getline(is, rest);
      continue;
    }
    if (std::isspace(c)) {
      if (tok.empty()) continue;
      break;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

int header_int(std::istream& is, const std::filesystem::path& file) {
  const auto t = token(is);
  try {
    size_t used = 0;
    const int v = std::stoi(t, &used);
    if (used == t.size() && v > 0) return v;
  } catch (const std::exception&) {
  }
  throw Error("pgm " + file.string() + ": bad header field '" + t + "'");
}

}  // namespace

Image read_pgm(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw Error("pgm: cannot open " + file.string());
  if (token(is) != "P5") throw Error("pgm " + file.string() + ": not a binary (P5) image");
  const int w = header_int(is, file), h = header_int(is, file), maxval = header_int(is, file);
  if (maxval > 255) throw Error("pgm " + file.string() + ": 16-bit images are not supported");
  std::vector<unsigned char> data(static_cast<size_t>(w) * h);
  is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (is.gcount() != static_cast<std::streamsize>(data.size()))
    throw Error("pgm " + file.string() + ": truncated pixel data");
  Image img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img(x, y) = data[static_cast<size_t>(y) * w + x] * 255 / maxval;
  return img;
}

void write_pgm(const std::filesystem::path& file, const Image& img) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw Error("pgm: cannot write " + file.string());
  os << "P5\n" << img.rows() << ' ' << img.cols() << "\n255\n";
  std::vector<unsigned char> data(static_cast<size_t>(img.size()));
  for (int y = 0; y < img.cols(); ++y)
    for (int x = 0; x < img.rows(); ++x)
      data[static_cast<size_t>(y) * img.rows() + x] = static_cast<unsigned char>(img(x, y));
  os.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

Image set_image(const CellSet& e) { return e.mask.cast<int>() * 255; }

Image function_image(const LevelFunction& u) {
  const double span = u.ceilValue - u.floorValue;
  if (!(span > 0)) return Image::Zero(u.grid.nx, u.grid.ny);
  return ((u.values - u.floorValue) / span * 255.0).round().cwiseMax(0).cwiseMin(255).cast<int>();
}

}  // namespace mmflow
