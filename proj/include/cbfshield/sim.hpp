#pragma once

#include "cbfshield/collision.hpp"
#include "cbfshield/kinematics.hpp"
#include "cbfshield/safety_filter.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cbfshield::sim {

using filter::ActionCommand;
using kin::Vector7;

inline constexpr int kLogSchemaVersion = 1;
/// Records with a barrier below this count as safety violations.
inline constexpr double kViolationThreshold = -1e-3;

// Policies ---------------------------------------------------------------

struct ConstantDelta {
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  Eigen::Vector3d rotation = Eigen::Vector3d::Zero();
  bool gripper = false;
};

/// translation = gain * (target - flange position), zero rotation.
struct WaypointApproach {
  Eigen::Vector3d target_position = Eigen::Vector3d::Zero();
  double gain = 0.1;
  bool gripper = false;
};

struct Scripted {
  std::vector<ActionCommand> actions;  // steps beyond the list are zero actions
};

struct NoisyHallucination;

using PolicySpec = std::variant<ConstantDelta, WaypointApproach, Scripted, NoisyHallucination>;

/// Base policy plus per-axis Gaussian translation noise and a constant
/// out-of-distribution bias.
struct NoisyHallucination {
  std::shared_ptr<const PolicySpec> base;
  Eigen::Vector3d noise_std = Eigen::Vector3d::Zero();
  Eigen::Vector3d ood_bias = Eigen::Vector3d::Zero();
};

PolicySpec make_hallucination(PolicySpec base, const Eigen::Vector3d& noise_std, const Eigen::Vector3d& ood_bias);

/// Action for policy step `step`. `flange_position` is measured at the start
/// of the step. Noise is keyed on (seed, step) only.
ActionCommand policy_action(const PolicySpec& policy, int step, const Eigen::Vector3d& flange_position,
                            std::uint64_t seed);

/// Standard normal sample keyed on (seed, step, stream).
double keyed_normal(std::uint64_t seed, std::uint64_t step, std::uint64_t stream);

// Scenarios --------------------------------------------------------------

struct ScenarioConfig {
  std::string name;
  std::string chain_path;  // relative paths resolve against the scenario file
  std::string scene_path;
  Vector7 initial_q = Vector7::Zero();
  PolicySpec policy = ConstantDelta{};
  int steps = 1;
  int substeps_per_action = 10;
  filter::FilterParams filter;
  bool filter_enabled = true;
  std::uint64_t seed = 0;
  std::string notes;
};

/// A scenario with its chain and scene resolved.
struct Scenario {
  ScenarioConfig config;
  kin::KinematicChain chain;
  collision::CollisionScene scene;

  /// Throws Validation when steps/substeps < 1, initial_q is outside the
  /// limits, h_col(initial_q) < 0, or the filter block is invalid.
  void validate() const;
};

Scenario load_scenario(std::string_view json_text, const std::string& base_dir = ".");
Scenario load_scenario_file(const std::string& path);
std::string scenario_to_json(const ScenarioConfig& config);

// Episodes ---------------------------------------------------------------

struct StepRecord {
  int index = 0;  // action * substeps + substep
  int action = 0;
  int substep = 0;
  Vector7 q = Vector7::Zero();  // after the substep
  double barrier = 0.0;
  std::string active_sphere;
  std::string active_obstacle;
  bool intervened = false;
  double tracking_error = 0.0;
  bool gripper = false;
  bool filter_error = false;
  bool recovery = false;
};

struct EpisodeSummary {
  double min_barrier = 0.0;
  int violation_count = 0;
  double intervention_rate = 0.0;
  double mean_tracking_error = 0.0;
  Eigen::Vector3d final_ee_position = Eigen::Vector3d::Zero();
  int filter_error_count = 0;

  bool operator==(const EpisodeSummary&) const = default;
};

struct EpisodeLog {
  int schema_version = kLogSchemaVersion;
  std::string scenario;
  bool filter_enabled = true;
  std::uint64_t seed = 0;
  int steps = 0;
  int substeps_per_action = 0;
  /// Hash of the scenario with filter_enabled cleared; pairs logs for comparison.
  std::string config_fingerprint;
  Vector7 initial_q = Vector7::Zero();
  std::vector<StepRecord> records;
  EpisodeSummary summary;
};

EpisodeLog run_episode(const Scenario& scenario);

/// Summary statistics recomputed from the raw records.
EpisodeSummary summarize(const kin::KinematicChain& chain, const std::vector<StepRecord>& records);

std::string log_to_json(const EpisodeLog& log);
std::string log_to_csv(const EpisodeLog& log);
EpisodeLog log_from_json(std::string_view json_text);

std::string config_fingerprint(const ScenarioConfig& config);

// Comparison -------------------------------------------------------------

struct ComparisonReport {
  std::string scenario;
  EpisodeSummary with_filter;
  EpisodeSummary without_filter;

  std::string to_json() const;
  std::string to_text() const;
};

/// Throws Validation when the logs do not come from the same scenario.
ComparisonReport compare_runs(const EpisodeLog& with_filter, const EpisodeLog& without_filter);

// Fixtures ---------------------------------------------------------------

struct Fixture {
  std::string file_stem;  // e.g. "scenario3_backward_ood"
  std::string scene_stem;
  Scenario scenario;
};

/// Scenario I (bottle beside a heated cylinder), II (litter-box dig) and
/// III (wall 5 cm behind the start, backward OOD push).
std::vector<Fixture> make_scenario_fixtures();

/// Scenario III scripted traces: 20 x 1 cm forward (-x) and downward (-z).
std::vector<Fixture> make_scenario3_traces();

/// The fixture's policy wrapped in NoisyHallucination.
Fixture hallucination_variant(const Fixture& fixture);

/// Every shipped fixture: the three scenarios, their hallucination
/// variants and the Scenario III traces.
std::vector<Fixture> all_fixtures();

/// Writes chain, scene and scenario files for all fixtures into `dir`.
std::vector<std::string> emit_fixtures(const std::string& dir);

// Batches ----------------------------------------------------------------

struct BatchResult {
  std::vector<EpisodeSummary> summaries;  // one per seed, in seed order
  int total_violations = 0;
  double worst_min_barrier = 0.0;
};

/// Runs the scenario for seeds first_seed .. first_seed + count - 1 on up to
/// `threads` worker threads, one filter workspace per episode.
BatchResult run_batch(const Scenario& scenario, std::uint64_t first_seed, int count, int threads = 0);

}  // namespace cbfshield::sim
