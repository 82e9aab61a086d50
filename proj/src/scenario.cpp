#include "cbfshield/error.hpp"
#include "cbfshield/sim.hpp"
#include "json_fields.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace cbfshield::sim {

using detail::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

ActionCommand parse_action(const json& j, const std::string& path) {
  ActionCommand a;
  a.translation = detail::vector<3>(j, path, "translation");
  a.rotation = j.contains("rotation") ? detail::vector<3>(j, path, "rotation") : Eigen::Vector3d::Zero();
  a.gripper = j.contains("gripper") ? detail::boolean(j, path, "gripper") : false;
  try {
    a.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::Validation, e.what(), path);
  }
  return a;
}

json action_json(const ActionCommand& a) {
  return {{"translation", detail::to_array(a.translation)},
          {"rotation", detail::to_array(a.rotation)},
          {"gripper", a.gripper}};
}

PolicySpec parse_policy(const json& j, const std::string& path) {
  const std::string kind = detail::string(j, path, "kind");
  const bool gripper = j.contains("gripper") ? detail::boolean(j, path, "gripper") : false;
  if (kind == "constant_delta") {
    ConstantDelta p;
    p.translation = detail::vector<3>(j, path, "translation");
    p.rotation = j.contains("rotation") ? detail::vector<3>(j, path, "rotation") : Eigen::Vector3d::Zero();
    p.gripper = gripper;
    return p;
  }
  if (kind == "waypoint_approach") {
    WaypointApproach p;
    p.target_position = detail::vector<3>(j, path, "target_position");
    p.gain = detail::number(j, path, "gain");
    p.gripper = gripper;
    return p;
  }
  if (kind == "scripted") {
    Scripted p;
    const json& actions = detail::array(j, path, "actions");
    for (std::size_t i = 0; i < actions.size(); ++i) {
      p.actions.push_back(parse_action(actions[i], detail::index(path + ".actions", i)));
    }
    return p;
  }
  if (kind == "noisy_hallucination") {
    const Eigen::Vector3d noise = detail::vector<3>(j, path, "noise_std");
    for (int i = 0; i < 3; ++i) {
      if (noise[i] < 0.0) throw Error(ErrorCode::Validation, "noise_std must be >= 0", path + ".noise_std");
    }
    return make_hallucination(parse_policy(detail::require(j, path, "base"), path + ".base"), noise,
                              detail::vector<3>(j, path, "ood_bias"));
  }
  throw Error(ErrorCode::Parse, "unknown policy kind '" + kind + "'", path + ".kind");
}

json policy_json(const PolicySpec& policy) {
  return std::visit(
      overloaded{[](const ConstantDelta& p) {
                   return json{{"kind", "constant_delta"},
                               {"translation", detail::to_array(p.translation)},
                               {"rotation", detail::to_array(p.rotation)},
                               {"gripper", p.gripper}};
                 },
                 [](const WaypointApproach& p) {
                   return json{{"kind", "waypoint_approach"},
                               {"target_position", detail::to_array(p.target_position)},
                               {"gain", p.gain},
                               {"gripper", p.gripper}};
                 },
                 [](const Scripted& p) {
                   json actions = json::array();
                   for (const auto& a : p.actions) actions.push_back(action_json(a));
                   return json{{"kind", "scripted"}, {"actions", actions}};
                 },
                 [](const NoisyHallucination& p) {
                   return json{{"kind", "noisy_hallucination"},
                               {"base", p.base ? policy_json(*p.base) : policy_json(ConstantDelta{})},
                               {"noise_std", detail::to_array(p.noise_std)},
                               {"ood_bias", detail::to_array(p.ood_bias)}};
                 }},
      policy);
}

filter::FilterParams parse_filter(const json& j) {
  const std::string path = "filter";
  filter::FilterParams p;
  p.lambda = detail::number_or(j, path, "lambda", p.lambda);
  p.gamma = detail::number_or(j, path, "gamma", p.gamma);
  p.activation_distance = detail::number_or(j, path, "activation_distance", p.activation_distance);
  p.step_cap = detail::number_or(j, path, "step_cap", p.step_cap);
  p.qp_tol = detail::number_or(j, path, "qp_tol", p.qp_tol);
  if (j.contains("qp_max_iter")) p.qp_max_iter = static_cast<int>(detail::integer(j, path, "qp_max_iter"));
  if (j.contains("mode")) {
    const std::string mode = detail::string(j, path, "mode");
    if (mode == "per_pair") {
      p.mode = filter::ConstraintMode::PerPair;
    } else if (mode == "single_min") {
      p.mode = filter::ConstraintMode::SingleMin;
    } else {
      throw Error(ErrorCode::Parse, "unknown mode '" + mode + "'", "filter.mode");
    }
  }
  p.validate();
  return p;
}

json filter_json(const filter::FilterParams& p) {
  return {{"lambda", p.lambda},
          {"gamma", p.gamma},
          {"activation_distance", p.activation_distance},
          {"step_cap", p.step_cap},
          {"qp_tol", p.qp_tol},
          {"qp_max_iter", p.qp_max_iter},
          {"mode", p.mode == filter::ConstraintMode::PerPair ? "per_pair" : "single_min"}};
}

std::string resolve(const std::string& base_dir, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

ScenarioConfig parse_config(const json& doc) {
  ScenarioConfig c;
  c.name = doc.contains("name") ? detail::string(doc, "", "name") : "scenario";
  c.notes = doc.contains("notes") ? detail::string(doc, "", "notes") : "";
  c.chain_path = detail::string(doc, "", "chain");
  c.scene_path = detail::string(doc, "", "scene");
  c.initial_q = detail::vector<kin::kNumJoints>(doc, "", "initial_q");
  c.policy = parse_policy(detail::require(doc, "", "policy"), "policy");
  c.steps = static_cast<int>(detail::integer(doc, "", "steps"));
  c.substeps_per_action =
      doc.contains("substeps_per_action") ? static_cast<int>(detail::integer(doc, "", "substeps_per_action")) : 10;
  c.filter = doc.contains("filter") ? parse_filter(doc["filter"]) : filter::FilterParams{};
  c.filter_enabled = doc.contains("filter_enabled") ? detail::boolean(doc, "", "filter_enabled") : true;
  if (doc.contains("seed")) {
    const json& s = doc["seed"];
    if (!s.is_number_integer()) throw Error(ErrorCode::Parse, "expected an integer", "seed");
    c.seed = s.get<std::uint64_t>();
  }
  return c;
}

}  // namespace

void Scenario::validate() const {
  if (config.steps < 1) throw Error(ErrorCode::Validation, "steps must be >= 1", "steps");
  if (config.substeps_per_action < 1) {
    throw Error(ErrorCode::Validation, "substeps_per_action must be >= 1", "substeps_per_action");
  }
  config.filter.validate();
  if (!chain.limits().contains(config.initial_q)) {
    throw Error(ErrorCode::Validation, "initial configuration is outside the joint limits", "initial_q");
  }
  const auto barrier = collision::evaluate_barrier(chain, kin::JointConfig(config.initial_q), scene);
  if (barrier.value < 0.0) {
    throw Error(ErrorCode::Validation,
                "initial configuration is unsafe (h_col = " + std::to_string(barrier.value) + " m, pair " +
                    barrier.active()->sphere_id + "/" + barrier.active()->obstacle_id + ")",
                "initial_q");
  }
}

Scenario load_scenario(std::string_view json_text, const std::string& base_dir) {
  const json doc = detail::parse_json(json_text, "scenario");
  if (!doc.is_object()) throw Error(ErrorCode::Parse, "scenario must be a JSON object");
  ScenarioConfig config = parse_config(doc);
  kin::KinematicChain chain = kin::load_chain_file(resolve(base_dir, config.chain_path));
  collision::CollisionScene scene = collision::load_scene_file(resolve(base_dir, config.scene_path));
  Scenario s{std::move(config), std::move(chain), std::move(scene)};
  s.validate();
  return s;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open scenario '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string dir = std::filesystem::path(path).parent_path().string();
  return load_scenario(buf.str(), dir.empty() ? "." : dir);
}

std::string scenario_to_json(const ScenarioConfig& c) {
  json doc;
  doc["schema_version"] = 1;
  doc["name"] = c.name;
  if (!c.notes.empty()) doc["notes"] = c.notes;
  doc["chain"] = c.chain_path;
  doc["scene"] = c.scene_path;
  doc["initial_q"] = detail::to_array(c.initial_q);
  doc["policy"] = policy_json(c.policy);
  doc["steps"] = c.steps;
  doc["substeps_per_action"] = c.substeps_per_action;
  doc["filter_enabled"] = c.filter_enabled;
  doc["seed"] = c.seed;
  doc["filter"] = filter_json(c.filter);
  return doc.dump(2) + "\n";
}

std::string config_fingerprint(const ScenarioConfig& config) {
  ScenarioConfig c = config;
  c.filter_enabled = false;
  const std::string text = scenario_to_json(c);
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace cbfshield::sim
