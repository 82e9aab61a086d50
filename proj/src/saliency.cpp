#include "cbfshield/saliency.hpp"

#include "cbfshield/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace cbfshield::saliency {

namespace {

void check_same_size(int w1, int h1, int w2, int h2) {
  if (w1 != w2 || h1 != h2) {
    throw Error(ErrorCode::DimensionMismatch, "map dimensions differ: " + std::to_string(w1) + "x" +
                                                  std::to_string(h1) + " vs " + std::to_string(w2) + "x" +
                                                  std::to_string(h2));
  }
}

double total(const std::vector<double>& w) {
  double s = 0.0;
  for (double v : w) s += v;
  return s;
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24;
}

void write_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

Grid read_csv_grid(std::istream& in, const std::string& path) {
  Grid g;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    std::istringstream ls(line);
    std::string cell;
    int cols = 0;
    while (std::getline(ls, cell, ',')) {
      try {
        g.values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(ErrorCode::Parse, "bad number '" + cell + "' in " + path);
      }
      ++cols;
    }
    if (g.height == 0) g.width = cols;
    if (cols != g.width) throw Error(ErrorCode::Parse, "ragged CSV grid in " + path);
    ++g.height;
  }
  return g;
}

}  // namespace

SpatialMap::SpatialMap(int width, int height, std::vector<double> weights)
    : width_(width), height_(height), weights_(std::move(weights)) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidArgument, "map dimensions must be positive");
  if (weights_.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::DimensionMismatch, "weight count does not match width x height");
  }
  bool any_positive = false;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorCode::InvalidArgument, "map weights must be finite and >= 0");
    any_positive = any_positive || w > 0.0;
  }
  if (!any_positive) throw Error(ErrorCode::InvalidArgument, "map has no positive weight");
}

double normalized_entropy(const SpatialMap& map) {
  const std::size_t n = map.weights().size();
  if (n == 1) return 0.0;
  const double sum = total(map.weights());
  double h = 0.0;
  for (double w : map.weights()) {
    if (w <= 0.0) continue;
    const double p = w / sum;
    h -= p * std::log(p);
  }
  // Rounding in the sum can overshoot the [0, 1] range by a few ulps.
  return std::clamp(h / std::log(static_cast<double>(n)), 0.0, 1.0);
}

double pearson_alignment(const SpatialMap& map, const SpatialMap& reference) {
  check_same_size(map.width(), map.height(), reference.width(), reference.height());
  const auto& x = map.weights();
  const auto& y = reference.weights();
  const double n = static_cast<double>(x.size());
  const double mx = total(x) / n;
  const double my = total(y) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::ZeroVariance, "Pearson correlation needs nonzero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double attention_mass(const SpatialMap& map, const TargetMask& mask) {
  check_same_size(map.width(), map.height(), mask.width, mask.height);
  if (mask.bits.size() != map.weights().size()) throw Error(ErrorCode::DimensionMismatch, "mask size mismatch");
  double inside = 0.0;
  for (std::size_t i = 0; i < mask.bits.size(); ++i) {
    if (mask.bits[i]) inside += map.weights()[i];
  }
  return inside / total(map.weights());
}

Grid read_grid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0) return read_csv_grid(in, path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "SMAP", 4) != 0) throw Error(ErrorCode::Parse, "'" + path + "' is not a SMAP grid");
  Grid g;
  g.width = static_cast<int>(read_u32(in));
  g.height = static_cast<int>(read_u32(in));
  if (!in || g.width <= 0 || g.height <= 0) throw Error(ErrorCode::Parse, "bad SMAP header in '" + path + "'");
  const std::size_t n = static_cast<std::size_t>(g.width) * g.height;
  std::vector<float> raw(n);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(n * sizeof(float))) {
    throw Error(ErrorCode::Parse, "truncated SMAP grid '" + path + "'");
  }
  g.values.assign(raw.begin(), raw.end());
  return g;
}

void write_grid(const std::string& path, const Grid& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  out.write("SMAP", 4);
  write_u32(out, static_cast<std::uint32_t>(grid.width));
  write_u32(out, static_cast<std::uint32_t>(grid.height));
  for (double v : grid.values) {
    const float f = static_cast<float>(v);
    out.write(reinterpret_cast<const char*>(&f), sizeof(float));
  }
}

SpatialMap map_from_grid(const Grid& grid) { return SpatialMap(grid.width, grid.height, grid.values); }

TargetMask mask_from_grid(const Grid& grid) {
  TargetMask m{grid.width, grid.height, {}};
  m.bits.reserve(grid.values.size());
  for (double v : grid.values) m.bits.push_back(v != 0.0);
  return m;
}

}  // namespace cbfshield::saliency
