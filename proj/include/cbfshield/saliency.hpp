#pragma once

#include <string>
#include <vector>

namespace cbfshield::saliency {

/// Row-major nonnegative weights with at least one positive entry.
class SpatialMap {
 public:
  SpatialMap(int width, int height, std::vector<double> weights);

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<double>& weights() const { return weights_; }

 private:
  int width_;
  int height_;
  std::vector<double> weights_;
};

struct TargetMask {
  int width = 0;
  int height = 0;
  std::vector<bool> bits;
};

/// Shannon entropy of the normalized map divided by ln(width*height); 0 for a
/// single pixel.
double normalized_entropy(const SpatialMap& map);

/// Sample Pearson correlation over flattened pixel pairs. Throws
/// DimensionMismatch or ZeroVariance.
double pearson_alignment(const SpatialMap& map, const SpatialMap& reference);

/// Fraction of the total weight falling on mask pixels.
double attention_mass(const SpatialMap& map, const TargetMask& mask);

/// Grid file: magic "SMAP", uint32 width, uint32 height (little endian), then
/// width*height float32 row-major. Files ending in ".csv" are read as rows of
/// comma-separated numbers instead.
struct Grid {
  int width = 0;
  int height = 0;
  std::vector<double> values;
};
Grid read_grid(const std::string& path);
void write_grid(const std::string& path, const Grid& grid);

SpatialMap map_from_grid(const Grid& grid);
/// Nonzero cells are inside the mask.
TargetMask mask_from_grid(const Grid& grid);

}  // namespace cbfshield::saliency
