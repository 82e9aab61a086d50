#include "cbfshield/error.hpp"
#include "cbfshield/sim.hpp"

#include <filesystem>
#include <fstream>

namespace cbfshield::sim {

// Obstacle sizes and positions below are plausible desk-scale values; only
// the Scenario III wall offset (5 cm) and the 20 cm traces are prescribed.

namespace {

using collision::Box;
using collision::CollisionSphere;
using collision::HalfSpace;
using collision::Obstacle;
using collision::VerticalCylinder;

constexpr double kMargin = 0.01;
constexpr int kSubsteps = 10;

Vector7 q_of(std::initializer_list<double> v) {
  Vector7 q;
  int i = 0;
  for (double x : v) q[i++] = x;
  return q;
}

Eigen::Vector3d flange_position(const Vector7& q) {
  return kin::forward_kinematics(kin::panda_chain(), kin::JointConfig(q))[kin::kFlangeFrame].translation;
}

Obstacle table() { return {"table", HalfSpace{Eigen::Vector3d::UnitZ(), 0.0}}; }

Fixture make_fixture(std::string stem, std::string scene_stem, ScenarioConfig cfg,
                     std::vector<CollisionSphere> spheres, std::vector<Obstacle> obstacles) {
  cfg.chain_path = "panda.json";
  cfg.scene_path = scene_stem + ".json";
  collision::CollisionScene scene(std::move(spheres), std::move(obstacles), kMargin);
  return {std::move(stem), std::move(scene_stem), Scenario{std::move(cfg), kin::panda_chain(), std::move(scene)}};
}

// Scenario III uses a stick end effector and the wall is a constraint on the
// tool, so only the stick spheres (flange frame) take part.
std::vector<CollisionSphere> stick_spheres() {
  return {{"stick_0", kin::kFlangeFrame, {0.0, 0.0, 0.02}, 0.02},
          {"stick_1", kin::kFlangeFrame, {0.0, 0.0, 0.08}, 0.02},
          {"stick_2", kin::kFlangeFrame, {0.0, 0.0, 0.14}, 0.02}};
}

std::vector<CollisionSphere> scoop_spheres() {
  auto s = collision::panda_default_spheres();
  s.push_back({"scoop_0", kin::kFlangeFrame, {0.0, 0.0, 0.05}, 0.03});
  s.push_back({"scoop_1", kin::kFlangeFrame, {0.0, 0.0, 0.10}, 0.03});
  return s;
}

const Vector7 kScenario3Start = q_of({0.0, -0.0364, 0.0, -2.3378, 0.0, 2.3014, 0.7854});

Fixture scenario3_base(std::string stem, std::string name, PolicySpec policy, int steps) {
  const Eigen::Vector3d start = flange_position(kScenario3Start);
  // Wall 5 cm behind the start along +x; the safe side is x <= x0 + 0.05.
  Obstacle wall{"wall", HalfSpace{Eigen::Vector3d(-1.0, 0.0, 0.0), -(start.x() + 0.05)}};
  ScenarioConfig cfg;
  cfg.name = std::move(name);
  cfg.notes = "Cross-modal disambiguation: stick end effector, wall 0.05 m behind the start along +x. "
              "Forward is -x, backward is +x.";
  cfg.initial_q = kScenario3Start;
  cfg.policy = std::move(policy);
  cfg.steps = steps;
  cfg.substeps_per_action = kSubsteps;
  return make_fixture(std::move(stem), "scene3_wall", std::move(cfg), stick_spheres(), {wall});
}

Scripted straight_trace(const Eigen::Vector3d& per_action, int count) {
  Scripted s;
  for (int i = 0; i < count; ++i) s.actions.push_back({per_action, Eigen::Vector3d::Zero(), false});
  return s;
}

}  // namespace

std::vector<Fixture> make_scenario_fixtures() {
  std::vector<Fixture> out;

  {
    // I: approach a bottle next to an upright heated object that was absent
    // from the demonstrations.
    ScenarioConfig cfg;
    cfg.name = "scenario1_bottle";
    cfg.notes = "Temperature-conditioned pick: waypoint approach past an upright heated cylinder "
                "(radius 4 cm, height 35 cm). Dimensions are illustrative.";
    cfg.initial_q = kin::panda_home().angles();
    cfg.policy = WaypointApproach{{0.55, 0.10, 0.30}, 0.15, false};
    cfg.steps = 40;
    cfg.substeps_per_action = kSubsteps;
    auto spheres = collision::panda_default_spheres();
    out.push_back(make_fixture("scenario1_bottle", "scene1_tabletop", cfg, spheres,
                               {table(), {"heated_cylinder", VerticalCylinder{{0.45, 0.03, 0.175}, 0.04, 0.175}}}));
  }

  {
    // II: descend into an open-top litter box from outside its rim.
    ScenarioConfig cfg;
    cfg.name = "scenario2_dig";
    cfg.notes = "Subsurface localization: open-top box (inner 0.30 x 0.40 m, rim 0.15 m) built from five slabs; "
                "the approach starts outside the near wall. Dimensions are illustrative.";
    cfg.initial_q = q_of({0.0, -0.6319, 0.0, -2.9776, 0.0, 2.3457, 0.7854});
    cfg.policy = WaypointApproach{{0.50, 0.0, 0.14}, 0.15, true};
    cfg.steps = 40;
    cfg.substeps_per_action = kSubsteps;
    const double t = 0.005;  // slab half-thickness
    std::vector<Obstacle> box = {
        {"box_floor", Box{{0.55, 0.0, t}, {0.15 + 2 * t, 0.20 + 2 * t, t}}},
        {"box_wall_near", Box{{0.40 - t, 0.0, 0.075}, {t, 0.20 + 2 * t, 0.075}}},
        {"box_wall_far", Box{{0.70 + t, 0.0, 0.075}, {t, 0.20 + 2 * t, 0.075}}},
        {"box_wall_left", Box{{0.55, 0.20 + t, 0.075}, {0.15, t, 0.075}}},
        {"box_wall_right", Box{{0.55, -0.20 - t, 0.075}, {0.15, t, 0.075}}},
    };
    out.push_back(make_fixture("scenario2_dig", "scene2_litter_box", cfg, scoop_spheres(), box));
  }

  out.push_back(scenario3_base("scenario3_backward_ood", "scenario3_backward_ood",
                               ConstantDelta{{0.01, 0.0, 0.0}, Eigen::Vector3d::Zero(), false}, 40));
  return out;
}

std::vector<Fixture> make_scenario3_traces() {
  return {scenario3_base("scenario3_forward", "scenario3_forward", straight_trace({-0.01, 0.0, 0.0}, 20), 20),
          scenario3_base("scenario3_downward", "scenario3_downward", straight_trace({0.0, 0.0, -0.01}, 20), 20)};
}

Fixture hallucination_variant(const Fixture& fixture) {
  Fixture f = fixture;
  ScenarioConfig& cfg = f.scenario.config;
  Eigen::Vector3d bias = Eigen::Vector3d::Zero();
  if (cfg.name == "scenario1_bottle") bias = {0.0, -0.005, -0.005};  // drift toward the heated object
  if (cfg.name == "scenario2_dig") bias = {0.0, 0.0, -0.01};         // plunge too deep
  if (cfg.name == "scenario3_backward_ood") {
    cfg.policy = ConstantDelta{};  // the backward motion comes from the bias alone
    bias = {0.01, 0.0, 0.0};
  }
  cfg.policy = make_hallucination(cfg.policy, Eigen::Vector3d::Constant(0.01), bias);
  cfg.name += "_hallucination";
  f.file_stem += "_hallucination";
  return f;
}

std::vector<Fixture> all_fixtures() {
  std::vector<Fixture> out = make_scenario_fixtures();
  const std::size_t base_count = out.size();
  for (std::size_t i = 0; i < base_count; ++i) out.push_back(hallucination_variant(out[i]));
  for (auto& f : make_scenario3_traces()) out.push_back(std::move(f));
  return out;
}

std::vector<std::string> emit_fixtures(const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create '" + dir + "': " + ec.message());
  std::vector<std::string> written;
  auto write = [&](const std::string& name, const std::string& text) {
    const fs::path path = fs::path(dir) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
    out << text;
    written.push_back(path.string());
  };
  write("panda.json", kin::bundled_panda_config());
  std::vector<std::string> scenes_done;
  for (const Fixture& f : all_fixtures()) {
    if (std::find(scenes_done.begin(), scenes_done.end(), f.scene_stem) == scenes_done.end()) {
      write(f.scene_stem + ".json", collision::scene_to_json(f.scenario.scene));
      scenes_done.push_back(f.scene_stem);
    }
    write(f.file_stem + ".json", scenario_to_json(f.scenario.config));
  }
  return written;
}

}  // namespace cbfshield::sim
