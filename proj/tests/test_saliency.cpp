#include "cbfshield/error.hpp"
#include "cbfshield/saliency.hpp"

#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

using namespace cbfshield;
using namespace cbfshield::saliency;

namespace {

const std::filesystem::path kFixtures = std::filesystem::path(CBFSHIELD_TEST_DIR) / "fixtures" / "saliency";

// Plain CSV reader independent of the library's grid loader.
std::vector<std::vector<double>> read_rows(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

std::vector<double> flat(const std::vector<std::vector<double>>& rows) {
  std::vector<double> v;
  for (const auto& r : rows) v.insert(v.end(), r.begin(), r.end());
  return v;
}

SpatialMap load_map(const std::string& name) { return map_from_grid(read_grid((kFixtures / name).string())); }

TargetMask full_mask(int w, int h, bool value) { return {w, h, std::vector<bool>(static_cast<std::size_t>(w) * h, value)}; }

SpatialMap random_map(std::mt19937_64& rng, int w, int h) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(w) * h);
  for (auto& x : v) x = u(rng) < 0.2 ? 0.0 : u(rng);
  v[0] += 1e-3;  // never all zero
  return {w, h, v};
}

const std::vector<std::string> kMaps = {"two_by_two.csv",          "map_a_3x3.csv",
                                        "map_b_3x3.csv",           "uniform_8x8.csv",
                                        "one_hot_8x8.csv",         "thermal_12x16.csv",
                                        "attention_focused_12x16.csv", "attention_diffuse_12x16.csv"};

}  // namespace

TEST(Entropy, UniformIsOne) {
  EXPECT_NEAR(normalized_entropy(SpatialMap(8, 8, std::vector<double>(64, 3.0))), 1.0, 1e-15);
}

TEST(Entropy, OneHotIsZero) {
  std::vector<double> v(64, 0.0);
  v[17] = 2.0;
  EXPECT_EQ(normalized_entropy(SpatialMap(8, 8, v)), 0.0);
}

TEST(Entropy, TwoByTwoExample) {
  const double expected = -(0.25 * std::log(0.25) + 0.25 * std::log(0.25) + 0.5 * std::log(0.5)) / std::log(4.0);
  EXPECT_NEAR(normalized_entropy(SpatialMap(2, 2, {1, 1, 2, 0})), expected, 1e-15);
  EXPECT_NEAR(expected, 0.75, 1e-15);
}

TEST(Entropy, SinglePixelIsZero) { EXPECT_EQ(normalized_entropy(SpatialMap(1, 1, {5.0})), 0.0); }

TEST(SpatialMapInvariants, RejectsInvalidWeights) {
  EXPECT_THROW(SpatialMap(2, 2, {0, 0, 0, 0}), Error);
  EXPECT_THROW(SpatialMap(2, 2, {1, -1, 0, 0}), Error);
  EXPECT_THROW(SpatialMap(2, 2, {1, std::nan(""), 0, 0}), Error);
  EXPECT_THROW(SpatialMap(2, 2, {1, 1, 1}), Error);
  EXPECT_THROW(SpatialMap(0, 2, {}), Error);
}

TEST(Pearson, SelfIsOne) {
  const auto m = load_map("map_a_3x3.csv");
  EXPECT_NEAR(pearson_alignment(m, m), 1.0, 1e-15);
}

TEST(Pearson, ComplementIsMinusOne) {
  const auto m = load_map("map_a_3x3.csv");
  std::vector<double> c;
  for (double w : m.weights()) c.push_back(2.0 - w);
  EXPECT_NEAR(pearson_alignment(m, SpatialMap(3, 3, c)), -1.0, 1e-15);
}

TEST(Pearson, FixedThreeByThreeMatchesDirectFormula) {
  const auto a = flat(read_rows(kFixtures / "map_a_3x3.csv"));
  const auto b = flat(read_rows(kFixtures / "map_b_3x3.csv"));
  EXPECT_NEAR(pearson_alignment(load_map("map_a_3x3.csv"), load_map("map_b_3x3.csv")), oracle::pearson(a, b), 1e-12);
}

TEST(Pearson, ErrorsAreDistinct) {
  const auto m = load_map("map_a_3x3.csv");
  try {
    pearson_alignment(m, SpatialMap(2, 2, {1, 2, 3, 4}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
  try {
    pearson_alignment(m, SpatialMap(3, 3, std::vector<double>(9, 1.0)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroVariance);
  }
}

TEST(AttentionMass, Examples) {
  const auto m = load_map("map_b_3x3.csv");
  EXPECT_EQ(attention_mass(m, full_mask(3, 3, true)), 1.0);
  EXPECT_EQ(attention_mass(m, full_mask(3, 3, false)), 0.0);
  TargetMask seventeen = full_mask(10, 10, false);
  for (int i = 0; i < 17; ++i) seventeen.bits[i * 5] = true;
  EXPECT_NEAR(attention_mass(SpatialMap(10, 10, std::vector<double>(100, 0.3)), seventeen), 0.17, 1e-15);
  EXPECT_THROW(attention_mass(m, full_mask(2, 3, true)), Error);
}

TEST(FixtureMaps, AllMetricsMatchDirectFormulas) {
  for (const auto& name : kMaps) {
    const auto values = flat(read_rows(kFixtures / name));
    const auto map = load_map(name);
    EXPECT_NEAR(normalized_entropy(map), oracle::entropy(values), 1e-12) << name;
  }
  const auto thermal = flat(read_rows(kFixtures / "thermal_12x16.csv"));
  const auto mask = flat(read_rows(kFixtures / "hot_mask_12x16.csv"));
  const auto tmask = mask_from_grid(read_grid((kFixtures / "hot_mask_12x16.csv").string()));
  for (const auto& name : {"attention_focused_12x16.csv", "attention_diffuse_12x16.csv"}) {
    const auto values = flat(read_rows(kFixtures / name));
    const auto map = load_map(name);
    EXPECT_NEAR(pearson_alignment(map, load_map("thermal_12x16.csv")), oracle::pearson(values, thermal), 1e-12);
    double in = 0, total = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      total += values[i];
      if (mask[i] != 0.0) in += values[i];
    }
    EXPECT_NEAR(attention_mass(map, tmask), in / total, 1e-12) << name;
  }
  const auto mask3 = mask_from_grid(read_grid((kFixtures / "mask_3x3.csv").string()));
  const auto a = flat(read_rows(kFixtures / "map_a_3x3.csv"));
  EXPECT_NEAR(attention_mass(load_map("map_a_3x3.csv"), mask3), (a[1] + a[2] + a[4]) / std::accumulate(a.begin(), a.end(), 0.0),
              1e-12);
}

TEST(FixtureMaps, FocusedAttentionIsLowerEntropyAndMoreAligned) {
  const auto focused = load_map("attention_focused_12x16.csv");
  const auto diffuse = load_map("attention_diffuse_12x16.csv");
  const auto thermal = load_map("thermal_12x16.csv");
  const auto mask = mask_from_grid(read_grid((kFixtures / "hot_mask_12x16.csv").string()));
  EXPECT_LT(normalized_entropy(focused), normalized_entropy(diffuse));
  EXPECT_GT(pearson_alignment(focused, thermal), pearson_alignment(diffuse, thermal));
  EXPECT_GT(attention_mass(focused, mask), attention_mass(diffuse, mask));
}

TEST(Properties, BoundsAndScaleInvariance) {
  std::mt19937_64 rng(91);
  std::uniform_int_distribution<int> dim(1, 20);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  for (int trial = 0; trial < 1000; ++trial) {
    const int w = dim(rng), h = dim(rng);
    const auto m = random_map(rng, w, h);
    const auto r = random_map(rng, w, h);
    TargetMask mask = full_mask(w, h, false);
    for (std::size_t i = 0; i < mask.bits.size(); ++i) mask.bits[i] = (rng() & 1) != 0;
    const double alpha = scale(rng);
    std::vector<double> scaled = m.weights();
    for (auto& x : scaled) x *= alpha;
    const SpatialMap ms(w, h, scaled);

    const double e = normalized_entropy(m);
    EXPECT_GE(e, 0.0);
    EXPECT_LE(e, 1.0);
    EXPECT_NEAR(normalized_entropy(ms), e, 1e-12);
    const double mass = attention_mass(m, mask);
    EXPECT_GE(mass, 0.0);
    EXPECT_LE(mass, 1.0);
    EXPECT_NEAR(attention_mass(ms, mask), mass, 1e-12);
    if (w * h > 1) {
      try {
        const double p = pearson_alignment(m, r);
        EXPECT_GE(p, -1.0);
        EXPECT_LE(p, 1.0);
        EXPECT_NEAR(pearson_alignment(ms, r), p, 1e-12);
      } catch (const Error& err) {
        EXPECT_EQ(err.code(), ErrorCode::ZeroVariance);
      }
    }
  }
}

TEST(Properties, PermutationInvariance) {
  std::mt19937_64 rng(92);
  const auto m = random_map(rng, 7, 9);
  TargetMask mask = full_mask(7, 9, false);
  for (std::size_t i = 0; i < mask.bits.size(); ++i) mask.bits[i] = (rng() % 3) == 0;
  std::vector<std::size_t> perm(m.weights().size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<double> pw(perm.size());
  TargetMask pm = mask;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    pw[i] = m.weights()[perm[i]];
    pm.bits[i] = mask.bits[perm[i]];
  }
  EXPECT_NEAR(normalized_entropy(SpatialMap(7, 9, pw)), normalized_entropy(m), 1e-12);
  EXPECT_NEAR(attention_mass(SpatialMap(7, 9, pw), pm), attention_mass(m, mask), 1e-12);
}

TEST(GridFiles, BinaryRoundTrip) {
  std::mt19937_64 rng(93);
  Grid g{5, 3, {}};
  for (int i = 0; i < 15; ++i) g.values.push_back(static_cast<float>(std::uniform_real_distribution<double>(0, 1)(rng)));
  const auto path = (std::filesystem::temp_directory_path() / "cbfshield_grid.smap").string();
  write_grid(path, g);
  const auto back = read_grid(path);
  EXPECT_EQ(back.width, 5);
  EXPECT_EQ(back.height, 3);
  EXPECT_EQ(back.values, g.values);
  // Header layout: magic, then little-endian width and height.
  std::ifstream in(path, std::ios::binary);
  char head[12];
  in.read(head, 12);
  EXPECT_EQ(std::string(head, 4), "SMAP");
  EXPECT_EQ(static_cast<unsigned char>(head[4]), 5);
  EXPECT_EQ(static_cast<unsigned char>(head[8]), 3);
  std::filesystem::remove(path);
}

TEST(GridFiles, MalformedInputs) {
  const auto dir = std::filesystem::temp_directory_path();
  const auto ragged = (dir / "cbfshield_ragged.csv").string();
  std::ofstream(ragged) << "1,2,3\n4,5\n";
  EXPECT_THROW(read_grid(ragged), Error);
  const auto junk = (dir / "cbfshield_junk.smap").string();
  std::ofstream(junk) << "NOPE";
  EXPECT_THROW(read_grid(junk), Error);
  EXPECT_THROW(read_grid((dir / "does_not_exist.smap").string()), Error);
  std::filesystem::remove(ragged);
  std::filesystem::remove(junk);
}
