#include "cbfshield/encoding.hpp"

#include "cbfshield/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <string>

extern const char kBundledTurboCsv[];

namespace cbfshield::encoding {

namespace {

std::uint8_t to_byte(double c) {
  c = std::clamp(c, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::floor(c * 255.0 + 0.5));
}

void check_dims(int w, int h) {
  if (w <= 0 || h <= 0) throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
}

}  // namespace

DepthMap::DepthMap(int w, int h, std::vector<float> v) : width(w), height(h), values(std::move(v)) {
  check_dims(w, h);
  if (values.size() != static_cast<std::size_t>(w) * h) {
    throw Error(ErrorCode::DimensionMismatch, "depth buffer size does not match width x height");
  }
}

std::array<std::uint8_t, 3> PseudoColorImage::at(int x, int y) const {
  const std::size_t o = 3 * (static_cast<std::size_t>(y) * width + x);
  return {pixels[o], pixels[o + 1], pixels[o + 2]};
}

const std::array<std::array<double, 3>, 256>& turbo_table() {
  static const auto table = [] {
    std::array<std::array<double, 3>, 256> t{};
    std::istringstream in(kBundledTurboCsv);
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
      if (line.empty() || line.front() == '#') continue;
      if (row >= t.size()) throw Error(ErrorCode::Parse, "turbo table has more than 256 rows");
      const char* p = line.c_str();
      for (int c = 0; c < 3; ++c) {
        char* end = nullptr;
        t[row][c] = std::strtod(p, &end);
        p = (*end == ',') ? end + 1 : end;
      }
      ++row;
    }
    if (row != t.size()) throw Error(ErrorCode::Parse, "turbo table must have 256 rows");
    return t;
  }();
  return table;
}

Rgb8 turbo_lut(double t) {
  const auto& table = turbo_table();
  t = std::clamp(t, 0.0, 1.0);
  const double pos = t * 255.0;
  const int i = std::min(static_cast<int>(pos), 254);
  const double frac = pos - i;
  Rgb8 out;
  for (int c = 0; c < 3; ++c) out[c] = to_byte(table[i][c] * (1.0 - frac) + table[i + 1][c] * frac);
  return out;
}

PseudoColorImage depth_to_turbo(const DepthMap& depth, double max_range) {
  if (!(max_range > 0.0) || !std::isfinite(max_range)) throw Error(ErrorCode::InvalidArgument, "max_range must be > 0");
  PseudoColorImage img;
  img.width = depth.width;
  img.height = depth.height;
  img.pixels.resize(depth.values.size() * 3);
  for (std::size_t k = 0; k < depth.values.size(); ++k) {
    const double v = depth.values[k];
    const double t = (std::isfinite(v) && v >= 0.0) ? std::clamp(v / max_range, 0.0, 1.0) : 1.0;
    const Rgb8 c = turbo_lut(t);
    std::copy(c.begin(), c.end(), img.pixels.begin() + 3 * k);
  }
  return img;
}

PseudoColorImage zero_mask_image(int width, int height) {
  check_dims(width, height);
  return {width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height * 3, 0)};
}

PseudoColorImage crop_resize(const PseudoColorImage& image, const CropRect& crop, int out_width, int out_height) {
  check_dims(out_width, out_height);
  if (crop.width <= 0 || crop.height <= 0 || crop.x < 0 || crop.y < 0 || crop.x + crop.width > image.width ||
      crop.y + crop.height > image.height) {
    throw Error(ErrorCode::InvalidArgument, "crop rectangle must lie inside the image");
  }
  PseudoColorImage out{out_width, out_height,
                       std::vector<std::uint8_t>(static_cast<std::size_t>(out_width) * out_height * 3)};
  const double sx = static_cast<double>(crop.width) / out_width;
  const double sy = static_cast<double>(crop.height) / out_height;
  for (int y = 0; y < out_height; ++y) {
    // Pixel-centre sampling.
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, crop.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, crop.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, crop.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, crop.width - 1);
      const double wx = fx - x0;
      const auto p00 = image.at(crop.x + x0, crop.y + y0);
      const auto p01 = image.at(crop.x + x1, crop.y + y0);
      const auto p10 = image.at(crop.x + x0, crop.y + y1);
      const auto p11 = image.at(crop.x + x1, crop.y + y1);
      for (int c = 0; c < 3; ++c) {
        const double top = p00[c] * (1 - wx) + p01[c] * wx;
        const double bottom = p10[c] * (1 - wx) + p11[c] * wx;
        out.pixels[3 * (static_cast<std::size_t>(y) * out_width + x) + c] =
            static_cast<std::uint8_t>(std::floor(top * (1 - wy) + bottom * wy + 0.5));
      }
    }
  }
  return out;
}

}  // namespace cbfshield::encoding
