#include "cbfshield/error.hpp"
#include "cbfshield/sim.hpp"
#include "json_fields.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <thread>

namespace cbfshield::sim {

using detail::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// JSON has no infinity; an obstacle-free scene logs its barrier as null.
json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double number_or_inf(const json& v, const std::string& path) {
  return v.is_null() ? kInf : detail::as_number(v, path);
}

json summary_json(const EpisodeSummary& s) {
  return {{"min_barrier", finite_or_null(s.min_barrier)},
          {"violation_count", s.violation_count},
          {"intervention_rate", s.intervention_rate},
          {"mean_tracking_error", s.mean_tracking_error},
          {"final_ee_position", detail::to_array(s.final_ee_position)},
          {"filter_error_count", s.filter_error_count}};
}

EpisodeSummary parse_summary(const json& j) {
  const std::string path = "summary";
  EpisodeSummary s;
  s.min_barrier = number_or_inf(detail::require(j, path, "min_barrier"), "summary.min_barrier");
  s.violation_count = static_cast<int>(detail::integer(j, path, "violation_count"));
  s.intervention_rate = detail::number(j, path, "intervention_rate");
  s.mean_tracking_error = detail::number(j, path, "mean_tracking_error");
  s.final_ee_position = detail::vector<3>(j, path, "final_ee_position");
  s.filter_error_count = static_cast<int>(detail::integer(j, path, "filter_error_count"));
  return s;
}

}  // namespace

EpisodeSummary summarize(const kin::KinematicChain& chain, const std::vector<StepRecord>& records) {
  EpisodeSummary s;
  s.min_barrier = kInf;
  if (records.empty()) return s;
  int interventions = 0;
  double tracking_sum = 0.0;
  for (const auto& r : records) {
    s.min_barrier = std::min(s.min_barrier, r.barrier);
    if (r.barrier < kViolationThreshold) ++s.violation_count;
    if (r.intervened) ++interventions;
    if (r.filter_error) ++s.filter_error_count;
    tracking_sum += r.tracking_error;
  }
  const double n = static_cast<double>(records.size());
  s.intervention_rate = interventions / n;
  s.mean_tracking_error = tracking_sum / n;
  s.final_ee_position = kin::forward_kinematics(chain, kin::JointConfig(records.back().q))[kin::kFlangeFrame].translation;
  return s;
}

EpisodeLog run_episode(const Scenario& scenario) {
  scenario.validate();
  const ScenarioConfig& cfg = scenario.config;
  EpisodeLog log;
  log.scenario = cfg.name;
  log.filter_enabled = cfg.filter_enabled;
  log.seed = cfg.seed;
  log.steps = cfg.steps;
  log.substeps_per_action = cfg.substeps_per_action;
  log.config_fingerprint = config_fingerprint(cfg);
  log.initial_q = cfg.initial_q;
  log.records.reserve(static_cast<std::size_t>(cfg.steps) * cfg.substeps_per_action);

  filter::FilterWorkspace workspace;
  Vector7 q = cfg.initial_q;
  const double split = 1.0 / cfg.substeps_per_action;

  for (int step = 0; step < cfg.steps; ++step) {
    const kin::JointConfig q_step(q);
    const Eigen::Vector3d flange = kin::forward_kinematics(scenario.chain, q_step)[kin::kFlangeFrame].translation;
    const ActionCommand sub = policy_action(cfg.policy, step, flange, cfg.seed).scaled(split);

    for (int substep = 0; substep < cfg.substeps_per_action; ++substep) {
      StepRecord rec;
      rec.action = step;
      rec.substep = substep;
      rec.index = step * cfg.substeps_per_action + substep;
      rec.gripper = sub.gripper;
      const kin::JointConfig current(q);
      Vector7 dq = Vector7::Zero();
      try {
        if (cfg.filter_enabled) {
          const filter::FilterResult res =
              filter::filter_action(scenario.chain, scenario.scene, current, sub, cfg.filter, &workspace);
          dq = res.dq_safe;
          rec.intervened = res.intervened;
          rec.tracking_error = res.tracking_error;
          rec.gripper = res.gripper;
          rec.recovery = res.status == filter::FilterStatus::UnsafeStartRecovery;
        } else {
          const kin::JacobianMatrix jac = kin::geometric_jacobian(scenario.chain, current);
          dq = filter::damped_least_squares(jac, sub.twist(), cfg.filter.lambda);
          rec.tracking_error = (jac * dq - sub.twist()).norm();
        }
      } catch (const Error&) {
        // Blocked substep: hold position and keep going.
        dq.setZero();
        rec.filter_error = true;
        rec.intervened = cfg.filter_enabled;
        rec.tracking_error = sub.twist().norm();
      }
      q += dq;
      rec.q = q;
      const auto barrier = collision::evaluate_barrier(scenario.chain, kin::JointConfig(q), scenario.scene);
      rec.barrier = barrier.value;
      if (const auto* active = barrier.active()) {
        rec.active_sphere = active->sphere_id;
        rec.active_obstacle = active->obstacle_id;
      }
      log.records.push_back(std::move(rec));
    }
  }
  log.summary = summarize(scenario.chain, log.records);
  return log;
}

std::string log_to_json(const EpisodeLog& log) {
  json doc;
  doc["schema_version"] = log.schema_version;
  doc["scenario"] = log.scenario;
  doc["filter_enabled"] = log.filter_enabled;
  doc["seed"] = log.seed;
  doc["steps"] = log.steps;
  doc["substeps_per_action"] = log.substeps_per_action;
  doc["config_fingerprint"] = log.config_fingerprint;
  doc["initial_q"] = detail::to_array(log.initial_q);
  doc["summary"] = summary_json(log.summary);
  json records = json::array();
  for (const auto& r : log.records) {
    records.push_back({{"index", r.index},
                       {"action", r.action},
                       {"substep", r.substep},
                       {"q", detail::to_array(r.q)},
                       {"barrier", finite_or_null(r.barrier)},
                       {"active_pair", {r.active_sphere, r.active_obstacle}},
                       {"intervened", r.intervened},
                       {"tracking_error", r.tracking_error},
                       {"gripper", r.gripper},
                       {"filter_error", r.filter_error},
                       {"recovery", r.recovery}});
  }
  doc["records"] = std::move(records);
  return doc.dump() + "\n";
}

EpisodeLog log_from_json(std::string_view json_text) {
  const json doc = detail::parse_json(json_text, "episode log");
  EpisodeLog log;
  log.schema_version = static_cast<int>(detail::integer(doc, "", "schema_version"));
  if (log.schema_version != kLogSchemaVersion) {
    throw Error(ErrorCode::Validation, "unsupported schema version " + std::to_string(log.schema_version),
                "schema_version");
  }
  log.scenario = detail::string(doc, "", "scenario");
  log.filter_enabled = detail::boolean(doc, "", "filter_enabled");
  log.seed = detail::require(doc, "", "seed").get<std::uint64_t>();
  log.steps = static_cast<int>(detail::integer(doc, "", "steps"));
  log.substeps_per_action = static_cast<int>(detail::integer(doc, "", "substeps_per_action"));
  log.config_fingerprint = detail::string(doc, "", "config_fingerprint");
  log.initial_q = detail::vector<kin::kNumJoints>(doc, "", "initial_q");
  log.summary = parse_summary(detail::require(doc, "", "summary"));
  const json& records = detail::array(doc, "", "records");
  for (std::size_t i = 0; i < records.size(); ++i) {
    const json& j = records[i];
    const std::string path = detail::index("records", i);
    StepRecord r;
    r.index = static_cast<int>(detail::integer(j, path, "index"));
    r.action = static_cast<int>(detail::integer(j, path, "action"));
    r.substep = static_cast<int>(detail::integer(j, path, "substep"));
    r.q = detail::vector<kin::kNumJoints>(j, path, "q");
    r.barrier = number_or_inf(detail::require(j, path, "barrier"), path + ".barrier");
    const json& pair = detail::array(j, path, "active_pair");
    if (pair.size() != 2) throw Error(ErrorCode::Parse, "expected [sphere, obstacle]", path + ".active_pair");
    r.active_sphere = pair[0].get<std::string>();
    r.active_obstacle = pair[1].get<std::string>();
    r.intervened = detail::boolean(j, path, "intervened");
    r.tracking_error = detail::number(j, path, "tracking_error");
    r.gripper = detail::boolean(j, path, "gripper");
    r.filter_error = detail::boolean(j, path, "filter_error");
    r.recovery = detail::boolean(j, path, "recovery");
    log.records.push_back(std::move(r));
  }
  return log;
}

std::string log_to_csv(const EpisodeLog& log) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "# schema_version=" << log.schema_version << " scenario=" << log.scenario
     << " filter_enabled=" << (log.filter_enabled ? 1 : 0) << " seed=" << log.seed
     << " config_fingerprint=" << log.config_fingerprint << "\n";
  os << "index,action,substep,q0,q1,q2,q3,q4,q5,q6,barrier,active_sphere,active_obstacle,intervened,"
        "tracking_error,gripper,filter_error,recovery\n";
  for (const auto& r : log.records) {
    os << r.index << ',' << r.action << ',' << r.substep;
    for (int i = 0; i < kin::kNumJoints; ++i) os << ',' << r.q[i];
    os << ',' << r.barrier << ',' << r.active_sphere << ',' << r.active_obstacle << ',' << int(r.intervened) << ','
       << r.tracking_error << ',' << int(r.gripper) << ',' << int(r.filter_error) << ',' << int(r.recovery) << '\n';
  }
  return os.str();
}

BatchResult run_batch(const Scenario& scenario, std::uint64_t first_seed, int count, int threads) {
  if (count < 0) throw Error(ErrorCode::InvalidArgument, "batch count must be >= 0");
  BatchResult out;
  out.summaries.resize(count);
  std::vector<std::string> errors(count);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int i = next++; i < count; i = next++) {
      Scenario s = scenario;
      s.config.seed = first_seed + static_cast<std::uint64_t>(i);
      try {
        out.summaries[i] = run_episode(s).summary;
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  int n_threads = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  n_threads = std::min(n_threads, std::max(count, 1));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (!e.empty()) throw Error(ErrorCode::Validation, "batch episode failed: " + e);
  }
  out.worst_min_barrier = kInf;
  for (const auto& s : out.summaries) {
    out.total_violations += s.violation_count;
    out.worst_min_barrier = std::min(out.worst_min_barrier, s.min_barrier);
  }
  return out;
}

ComparisonReport compare_runs(const EpisodeLog& with_filter, const EpisodeLog& without_filter) {
  if (!with_filter.filter_enabled || without_filter.filter_enabled) {
    throw Error(ErrorCode::Validation, "expected one log with the filter enabled and one without");
  }
  if (with_filter.config_fingerprint != without_filter.config_fingerprint ||
      with_filter.scenario != without_filter.scenario) {
    throw Error(ErrorCode::Validation, "logs come from different scenario configurations ('" + with_filter.scenario +
                                           "' vs '" + without_filter.scenario + "')");
  }
  return {with_filter.scenario, with_filter.summary, without_filter.summary};
}

std::string ComparisonReport::to_json() const {
  json doc;
  doc["schema_version"] = kLogSchemaVersion;
  doc["scenario"] = scenario;
  doc["with_filter"] = summary_json(with_filter);
  doc["without_filter"] = summary_json(without_filter);
  return doc.dump(2) + "\n";
}

std::string ComparisonReport::to_text() const {
  std::ostringstream os;
  auto row = [&](const std::string& name, const std::string& a, const std::string& b) {
    os << std::left << std::setw(26) << name << std::setw(28) << a << b << '\n';
  };
  auto num = [](double v) {
    std::ostringstream s;
    s << std::setprecision(6) << v;
    return s.str();
  };
  auto vec = [](const Eigen::Vector3d& v) {
    auto clean = [](double x) { return std::abs(x) < 5e-5 ? 0.0 : x; };  // no "-0.0000"
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << '(' << clean(v.x()) << ", " << clean(v.y()) << ", " << clean(v.z()) << ')';
    return s.str();
  };
  os << "scenario: " << scenario << '\n';
  row("metric", "w/ safety filter", "w/o safety filter");
  row("min barrier [m]", num(with_filter.min_barrier), num(without_filter.min_barrier));
  row("violations (< -1e-3 m)", std::to_string(with_filter.violation_count),
      std::to_string(without_filter.violation_count));
  row("intervention rate", num(with_filter.intervention_rate), num(without_filter.intervention_rate));
  row("mean tracking error [m]", num(with_filter.mean_tracking_error), num(without_filter.mean_tracking_error));
  row("final EE position [m]", vec(with_filter.final_ee_position), vec(without_filter.final_ee_position));
  row("filter errors", std::to_string(with_filter.filter_error_count), std::to_string(without_filter.filter_error_count));
  return os.str();
}

}  // namespace cbfshield::sim
