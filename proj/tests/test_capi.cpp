#include "cbfshield/cbfshield.h"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = fs::path(CBFSHIELD_DATA_DIR) / "scenarios";

struct StringDeleter {
  void operator()(char* s) const { cbfs_string_free(s); }
};
using OwnedString = std::unique_ptr<char, StringDeleter>;

struct Handles {
  cbfs_chain* chain = nullptr;
  cbfs_scene* scene = nullptr;
  ~Handles() {
    cbfs_scene_free(scene);
    cbfs_chain_free(chain);
  }
};

const double kHome[7] = {0.0, -0.785398, 0.0, -2.356194, 0.0, 1.570796, 0.785398};

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("cbfshield_capi_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST(CApi, VersionAndStatusNames) {
  EXPECT_STRNE(cbfs_version(), "");
  EXPECT_STREQ(cbfs_status_name(CBFS_OK), "ok");
  EXPECT_STRNE(cbfs_status_name(CBFS_ERR_INFEASIBLE), cbfs_status_name(CBFS_ERR_MAX_ITERATIONS));
  EXPECT_STREQ(cbfs_status_name(static_cast<cbfs_status>(999)), "unknown");
}

TEST(CApi, NullArgumentsAreRejected) {
  EXPECT_EQ(cbfs_chain_bundled(nullptr), CBFS_ERR_INVALID_ARGUMENT);
  EXPECT_NE(std::string(cbfs_last_error()), "");
  double v = 0;
  EXPECT_EQ(cbfs_barrier(nullptr, nullptr, kHome, &v, nullptr), CBFS_ERR_INVALID_ARGUMENT);
  cbfs_chain_free(nullptr);
  cbfs_scene_free(nullptr);
  cbfs_log_free(nullptr);
  cbfs_scenario_free(nullptr);
  cbfs_string_free(nullptr);
}

TEST(CApi, ParseAndValidationErrorsCarryMessages) {
  cbfs_chain* chain = nullptr;
  EXPECT_EQ(cbfs_chain_load_string("{not json", &chain), CBFS_ERR_PARSE);
  EXPECT_EQ(chain, nullptr);
  EXPECT_EQ(cbfs_chain_load_string(R"({"joints": []})", &chain), CBFS_ERR_VALIDATION);
  EXPECT_NE(std::string(cbfs_last_error()), "");
  cbfs_scene* scene = nullptr;
  EXPECT_EQ(cbfs_scene_load_file("/nonexistent/scene.json", &scene), CBFS_ERR_IO);
  EXPECT_EQ(cbfs_chain_load_file((kScenarios / "panda.json").c_str(), &chain), CBFS_OK);
  EXPECT_STREQ(cbfs_last_error(), "");
  cbfs_chain_free(chain);
}

TEST(CApi, KinematicsMatchesBetweenBundledAndFileChains) {
  Handles a, b;
  ASSERT_EQ(cbfs_chain_bundled(&a.chain), CBFS_OK);
  ASSERT_EQ(cbfs_chain_load_file((kScenarios / "panda.json").c_str(), &b.chain), CBFS_OK);
  double fa[8 * 16], fb[8 * 16], ja[42], jb[42];
  ASSERT_EQ(cbfs_forward_kinematics(a.chain, kHome, fa), CBFS_OK);
  ASSERT_EQ(cbfs_forward_kinematics(b.chain, kHome, fb), CBFS_OK);
  ASSERT_EQ(cbfs_jacobian(a.chain, kHome, ja), CBFS_OK);
  ASSERT_EQ(cbfs_jacobian(b.chain, kHome, jb), CBFS_OK);
  for (int i = 0; i < 128; ++i) EXPECT_DOUBLE_EQ(fa[i], fb[i]);
  for (int i = 0; i < 42; ++i) EXPECT_DOUBLE_EQ(ja[i], jb[i]);
  // Frame 0 is the base, the bottom row of every transform is 0 0 0 1.
  EXPECT_EQ(fa[0], 1.0);
  for (int f = 0; f < 8; ++f) EXPECT_EQ(fa[16 * f + 15], 1.0);

  double lo[7], hi[7];
  ASSERT_EQ(cbfs_chain_limits(a.chain, lo, hi), CBFS_OK);
  for (int i = 0; i < 7; ++i) EXPECT_LT(lo[i], hi[i]);
}

TEST(CApi, JacobianMatchesFiniteDifferenceOfFlange) {
  Handles h;
  ASSERT_EQ(cbfs_chain_bundled(&h.chain), CBFS_OK);
  double J[42];
  ASSERT_EQ(cbfs_jacobian(h.chain, kHome, J), CBFS_OK);
  const double eps = 1e-6;
  for (int j = 0; j < 7; ++j) {
    double qp[7], qm[7], fp[128], fm[128];
    std::copy(kHome, kHome + 7, qp);
    std::copy(kHome, kHome + 7, qm);
    qp[j] += eps;
    qm[j] -= eps;
    cbfs_forward_kinematics(h.chain, qp, fp);
    cbfs_forward_kinematics(h.chain, qm, fm);
    for (int r = 0; r < 3; ++r) {
      const double fd = (fp[7 * 16 + 4 * r + 3] - fm[7 * 16 + 4 * r + 3]) / (2 * eps);
      EXPECT_NEAR(J[7 * r + j], fd, 1e-7);
    }
  }
}

TEST(CApi, FilterActionOnSceneFile) {
  Handles h;
  ASSERT_EQ(cbfs_chain_bundled(&h.chain), CBFS_OK);
  ASSERT_EQ(cbfs_scene_load_file((kScenarios / "scene1_tabletop.json").c_str(), &h.scene), CBFS_OK);
  cbfs_filter_params p;
  cbfs_filter_params_default(&p);
  EXPECT_EQ(p.lambda, 1e-3);
  EXPECT_EQ(p.gamma, 0.5);
  EXPECT_EQ(p.step_cap, 0.02);
  EXPECT_EQ(p.qp_max_iter, 100);

  double value = 0, grad[7];
  ASSERT_EQ(cbfs_barrier(h.chain, h.scene, kHome, &value, grad), CBFS_OK);
  EXPECT_GT(value, 0.0);

  const double t[3] = {0.0, 0.0, -0.003}, r[3] = {0, 0, 0};
  cbfs_filter_result res;
  ASSERT_EQ(cbfs_filter_action(h.chain, h.scene, kHome, t, r, 1, &p, &res), CBFS_OK);
  EXPECT_EQ(res.gripper, 1);
  EXPECT_EQ(res.recovery, 0);
  EXPECT_DOUBLE_EQ(res.barrier_before, value);
  for (double d : res.dq) EXPECT_LE(std::abs(d), p.step_cap + 1e-12);

  p.gamma = 2.0;
  EXPECT_EQ(cbfs_filter_action(h.chain, h.scene, kHome, t, r, 0, &p, &res), CBFS_ERR_VALIDATION);
  cbfs_filter_params_default(&p);
  const double bad_rot[3] = {4.0, 0, 0};
  EXPECT_EQ(cbfs_filter_action(h.chain, h.scene, kHome, t, bad_rot, 0, &p, &res), CBFS_ERR_INVALID_ARGUMENT);
}

TEST(CApi, EmptySceneBarrierIsInfinite) {
  Handles h;
  ASSERT_EQ(cbfs_chain_bundled(&h.chain), CBFS_OK);
  ASSERT_EQ(cbfs_scene_load_string(
                R"({"schema_version": 1, "margin": 0.01, "obstacles": [],
                    "spheres": [{"id": "s", "link": 7, "center": [0, 0, 0], "radius": 0.05}]})",
                &h.scene), CBFS_OK);
  double value = 0;
  ASSERT_EQ(cbfs_barrier(h.chain, h.scene, kHome, &value, nullptr), CBFS_OK);
  EXPECT_TRUE(std::isinf(value));
}

TEST(CApi, EpisodeRunSerializeReloadCompare) {
  const fs::path dir = scratch_dir("episode");
  cbfs_scenario* sc = nullptr;
  ASSERT_EQ(cbfs_scenario_load_file((kScenarios / "scenario3_backward_ood.json").c_str(), &sc), CBFS_OK)
      << cbfs_last_error();
  char* name = nullptr;
  ASSERT_EQ(cbfs_scenario_name(sc, &name), CBFS_OK);
  EXPECT_STREQ(name, "scenario3_backward_ood");
  cbfs_string_free(name);

  cbfs_log *on = nullptr, *off = nullptr;
  ASSERT_EQ(cbfs_episode_run(sc, &on), CBFS_OK);
  ASSERT_EQ(cbfs_scenario_set_filter_enabled(sc, 0), CBFS_OK);
  ASSERT_EQ(cbfs_episode_run(sc, &off), CBFS_OK);

  cbfs_summary s_on, s_off;
  ASSERT_EQ(cbfs_log_summary(on, &s_on), CBFS_OK);
  ASSERT_EQ(cbfs_log_summary(off, &s_off), CBFS_OK);
  EXPECT_EQ(s_on.filter_enabled, 1);
  EXPECT_EQ(s_off.filter_enabled, 0);
  EXPECT_EQ(s_on.violation_count, 0);
  EXPECT_GT(s_off.violation_count, 0);
  EXPECT_LT(s_off.min_barrier, -0.05);
  EXPECT_GT(s_on.intervention_rate, 0.0);

  char* json = nullptr;
  ASSERT_EQ(cbfs_log_to_json(on, &json), CBFS_OK);
  const fs::path path = dir / "on.json";
  {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    std::fputs(json, f);
    std::fclose(f);
  }
  cbfs_log* reloaded = nullptr;
  ASSERT_EQ(cbfs_log_load_file(path.c_str(), &reloaded), CBFS_OK) << cbfs_last_error();
  char* json2 = nullptr;
  ASSERT_EQ(cbfs_log_to_json(reloaded, &json2), CBFS_OK);
  EXPECT_STREQ(json, json2);
  cbfs_string_free(json);
  cbfs_string_free(json2);

  char* csv = nullptr;
  ASSERT_EQ(cbfs_log_to_csv(on, &csv), CBFS_OK);
  EXPECT_NE(std::string(csv).find('\n'), std::string::npos);
  cbfs_string_free(csv);

  char *cmp_json = nullptr, *cmp_text = nullptr;
  ASSERT_EQ(cbfs_compare_logs(off, reloaded, &cmp_json, &cmp_text), CBFS_OK);
  const auto report = nlohmann::json::parse(cmp_json);
  EXPECT_TRUE(report.is_object());
  EXPECT_NE(std::string(cmp_text), "");
  cbfs_string_free(cmp_json);
  cbfs_string_free(cmp_text);
  EXPECT_EQ(cbfs_compare_logs(on, reloaded, &cmp_json, &cmp_text), CBFS_ERR_VALIDATION);

  cbfs_log_free(reloaded);
  cbfs_log_free(on);
  cbfs_log_free(off);
  cbfs_scenario_free(sc);
  fs::remove_all(dir);
}

TEST(CApi, BatchRunIsThreadCountIndependent) {
  cbfs_scenario* sc = nullptr;
  ASSERT_EQ(cbfs_scenario_load_file((kScenarios / "scenario1_bottle_hallucination.json").c_str(), &sc), CBFS_OK);
  cbfs_batch_result one, two;
  ASSERT_EQ(cbfs_batch_run(sc, 5, 6, 1, &one), CBFS_OK);
  ASSERT_EQ(cbfs_batch_run(sc, 5, 6, 2, &two), CBFS_OK);
  EXPECT_EQ(one.episodes, 6);
  EXPECT_EQ(one.total_violations, 0);
  EXPECT_EQ(one.worst_min_barrier, two.worst_min_barrier);
  EXPECT_EQ(cbfs_batch_run(sc, 0, -1, 1, &one), CBFS_ERR_INVALID_ARGUMENT);
  cbfs_scenario_free(sc);
}

TEST(CApi, FixturesEmitMatchesShippedFiles) {
  const fs::path dir = scratch_dir("fixtures");
  size_t n = 0;
  ASSERT_EQ(cbfs_fixtures_emit(dir.c_str(), &n), CBFS_OK);
  std::size_t shipped = 0;
  for (const auto& e : fs::directory_iterator(kScenarios)) {
    ++shipped;
    EXPECT_TRUE(fs::exists(dir / e.path().filename())) << e.path();
  }
  EXPECT_EQ(n, shipped);
  fs::remove_all(dir);
}

TEST(CApi, EncodingEntryPoints) {
  std::vector<float> depth = {0.0f, 2.5f, 5.0f, 9.0f};
  std::vector<uint8_t> rgb(12);
  ASSERT_EQ(cbfs_depth_to_turbo(depth.data(), 2, 2, 5.0, rgb.data()), CBFS_OK);
  EXPECT_TRUE(std::equal(rgb.begin() + 6, rgb.begin() + 9, rgb.begin() + 9));
  EXPECT_EQ(cbfs_depth_to_turbo(depth.data(), 2, 2, 0.0, rgb.data()), CBFS_ERR_INVALID_ARGUMENT);
  ASSERT_EQ(cbfs_zero_mask(2, 2, rgb.data()), CBFS_OK);
  for (auto b : rgb) EXPECT_EQ(b, 0);
}

TEST(CApi, MetricsJson) {
  const fs::path fx = fs::path(CBFSHIELD_TEST_DIR) / "fixtures" / "saliency";
  char* out = nullptr;
  ASSERT_EQ(cbfs_metrics_json((fx / "uniform_8x8.csv").c_str(), nullptr, nullptr, &out), CBFS_OK);
  auto j = nlohmann::json::parse(out);
  cbfs_string_free(out);
  EXPECT_DOUBLE_EQ(j["entropy"].get<double>(), 1.0);
  EXPECT_FALSE(j.contains("pearson"));
  ASSERT_EQ(cbfs_metrics_json((fx / "map_a_3x3.csv").c_str(), (fx / "map_b_3x3.csv").c_str(),
                              (fx / "mask_3x3.csv").c_str(), &out),
            CBFS_OK);
  j = nlohmann::json::parse(out);
  cbfs_string_free(out);
  EXPECT_TRUE(j.contains("pearson"));
  EXPECT_TRUE(j.contains("mass"));
  EXPECT_EQ(cbfs_metrics_json((fx / "map_a_3x3.csv").c_str(), (fx / "uniform_8x8.csv").c_str(), nullptr, &out),
            CBFS_ERR_DIMENSION_MISMATCH);
}
