#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace cbfshield::encoding {

inline constexpr double kDefaultDepthRange = 5.0;  // m

/// Row-major depth in metres. Non-finite or negative entries are invalid.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<float> values;

  DepthMap(int w, int h, std::vector<float> v);
};

/// Packed row-major 8-bit RGB.
struct PseudoColorImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // 3 * width * height

  std::array<std::uint8_t, 3> at(int x, int y) const;
};

using Rgb8 = std::array<std::uint8_t, 3>;

/// The 256-entry Turbo table bundled with the library, linear RGB in [0, 1].
const std::array<std::array<double, 3>, 256>& turbo_table();

/// Linear interpolation into the Turbo table at t in [0, 1] (clamped),
/// rounded half-up to 8 bits.
Rgb8 turbo_lut(double t);

/// clamp(depth / max_range, 0, 1) through the Turbo table. Invalid depths
/// map to t = 1 (far).
PseudoColorImage depth_to_turbo(const DepthMap& depth, double max_range = kDefaultDepthRange);

/// All-zero image standing in for a disabled modality.
PseudoColorImage zero_mask_image(int width, int height);

struct CropRect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
};

/// Pass-through for native pseudo-colour images: crop, then bilinear resize
/// to out_width x out_height.
PseudoColorImage crop_resize(const PseudoColorImage& image, const CropRect& crop, int out_width, int out_height);

}  // namespace cbfshield::encoding
