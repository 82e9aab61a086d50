#include "cbfshield/cbfshield.h"

#include "cbfshield/collision.hpp"
#include "cbfshield/encoding.hpp"
#include "cbfshield/error.hpp"
#include "cbfshield/kinematics.hpp"
#include "cbfshield/safety_filter.hpp"
#include "cbfshield/saliency.hpp"
#include "cbfshield/sim.hpp"

#include <json.hpp>

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>

using namespace cbfshield;

struct cbfs_chain {
  kin::KinematicChain chain;
};
struct cbfs_scene {
  collision::CollisionScene scene;
};
struct cbfs_scenario {
  sim::Scenario scenario;
};
struct cbfs_log {
  sim::EpisodeLog log;
};

namespace {

thread_local std::string g_last_error;

cbfs_status code_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return CBFS_ERR_INVALID_ARGUMENT;
    case ErrorCode::Parse: return CBFS_ERR_PARSE;
    case ErrorCode::Validation: return CBFS_ERR_VALIDATION;
    case ErrorCode::Infeasible: return CBFS_ERR_INFEASIBLE;
    case ErrorCode::MaxIterations: return CBFS_ERR_MAX_ITERATIONS;
    case ErrorCode::Io: return CBFS_ERR_IO;
    case ErrorCode::DimensionMismatch: return CBFS_ERR_DIMENSION_MISMATCH;
    case ErrorCode::ZeroVariance: return CBFS_ERR_ZERO_VARIANCE;
  }
  return CBFS_ERR_INTERNAL;
}

template <class F>
cbfs_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return CBFS_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return code_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return CBFS_ERR_INTERNAL;
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, std::string(what) + " must not be null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

kin::JointConfig joints(const double* q) {
  require(q, "q");
  return kin::JointConfig(Eigen::Map<const kin::Vector7>(q));
}

std::string read_file(const char* path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, std::string("cannot open '") + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

filter::FilterParams to_params(const cbfs_filter_params& p) {
  filter::FilterParams out;
  out.lambda = p.lambda;
  out.gamma = p.gamma;
  out.activation_distance = p.activation_distance;
  out.step_cap = p.step_cap;
  out.qp_tol = p.qp_tol;
  out.qp_max_iter = p.qp_max_iter;
  if (p.mode != CBFS_MODE_PER_PAIR && p.mode != CBFS_MODE_SINGLE_MIN)
    throw Error(ErrorCode::InvalidArgument, "unknown constraint mode");
  out.mode = p.mode == CBFS_MODE_SINGLE_MIN ? filter::ConstraintMode::SingleMin : filter::ConstraintMode::PerPair;
  return out;
}

void check_image_args(int width, int height, const void* buffer) {
  require(buffer, "image buffer");
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
}

}  // namespace

extern "C" {

const char* cbfs_version(void) { return "0.1.0"; }

const char* cbfs_status_name(cbfs_status status) {
  switch (status) {
    case CBFS_OK: return "ok";
    case CBFS_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case CBFS_ERR_PARSE: return "parse";
    case CBFS_ERR_VALIDATION: return "validation";
    case CBFS_ERR_INFEASIBLE: return "infeasible";
    case CBFS_ERR_MAX_ITERATIONS: return "max_iterations";
    case CBFS_ERR_IO: return "io";
    case CBFS_ERR_DIMENSION_MISMATCH: return "dimension_mismatch";
    case CBFS_ERR_ZERO_VARIANCE: return "zero_variance";
    case CBFS_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* cbfs_last_error(void) { return g_last_error.c_str(); }

void cbfs_string_free(char* str) { std::free(str); }

cbfs_status cbfs_chain_bundled(cbfs_chain** out) {
  return guarded([&] {
    require(out, "out");
    *out = new cbfs_chain{kin::panda_chain()};
  });
}

cbfs_status cbfs_chain_load_file(const char* path, cbfs_chain** out) {
  return guarded([&] {
    require(path && out, "path and out");
    *out = new cbfs_chain{kin::load_chain_file(path)};
  });
}

cbfs_status cbfs_chain_load_string(const char* json, cbfs_chain** out) {
  return guarded([&] {
    require(json && out, "json and out");
    *out = new cbfs_chain{kin::load_chain(json)};
  });
}

void cbfs_chain_free(cbfs_chain* chain) { delete chain; }

cbfs_status cbfs_chain_limits(const cbfs_chain* chain, double lower[7], double upper[7]) {
  return guarded([&] {
    require(chain && lower && upper, "chain, lower and upper");
    Eigen::Map<kin::Vector7> lo(lower), hi(upper);
    lo = chain->chain.limits().lower;
    hi = chain->chain.limits().upper;
  });
}

cbfs_status cbfs_forward_kinematics(const cbfs_chain* chain, const double q[7], double frames[8 * 16]) {
  return guarded([&] {
    require(chain && frames, "chain and frames");
    const auto list = kin::forward_kinematics(chain->chain, joints(q));
    for (int f = 0; f < kin::kNumFrames; ++f) {
      const Eigen::Matrix4d m = list[f].matrix();
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) frames[16 * f + 4 * r + c] = m(r, c);
    }
  });
}

cbfs_status cbfs_jacobian(const cbfs_chain* chain, const double q[7], double jacobian[6 * 7]) {
  return guarded([&] {
    require(chain && jacobian, "chain and jacobian");
    Eigen::Map<Eigen::Matrix<double, 6, 7, Eigen::RowMajor>> out(jacobian);
    out = kin::geometric_jacobian(chain->chain, joints(q));
  });
}

cbfs_status cbfs_scene_load_file(const char* path, cbfs_scene** out) {
  return guarded([&] {
    require(path && out, "path and out");
    *out = new cbfs_scene{collision::load_scene_file(path)};
  });
}

cbfs_status cbfs_scene_load_string(const char* json, cbfs_scene** out) {
  return guarded([&] {
    require(json && out, "json and out");
    *out = new cbfs_scene{collision::load_scene(json)};
  });
}

void cbfs_scene_free(cbfs_scene* scene) { delete scene; }

cbfs_status cbfs_barrier(const cbfs_chain* chain, const cbfs_scene* scene, const double q[7], double* value,
                         double gradient[7]) {
  return guarded([&] {
    require(chain && scene && value, "chain, scene and value");
    const auto eval = collision::evaluate_barrier(chain->chain, joints(q), scene->scene);
    *value = eval.value;
    if (gradient) Eigen::Map<kin::Vector7>{gradient} = eval.gradient;
  });
}

void cbfs_filter_params_default(cbfs_filter_params* params) {
  if (!params) return;
  const filter::FilterParams d;
  params->lambda = d.lambda;
  params->gamma = d.gamma;
  params->activation_distance = d.activation_distance;
  params->step_cap = d.step_cap;
  params->qp_tol = d.qp_tol;
  params->qp_max_iter = d.qp_max_iter;
  params->mode = CBFS_MODE_PER_PAIR;
}

cbfs_status cbfs_filter_action(const cbfs_chain* chain, const cbfs_scene* scene, const double q[7],
                               const double translation[3], const double rotation[3], int gripper,
                               const cbfs_filter_params* params, cbfs_filter_result* result) {
  return guarded([&] {
    require(chain && scene && translation && rotation && result, "chain, scene, action and result");
    filter::FilterParams p;
    if (params) p = to_params(*params);
    const filter::ActionCommand action{Eigen::Map<const Eigen::Vector3d>(translation),
                                       Eigen::Map<const Eigen::Vector3d>(rotation), gripper != 0};
    const auto r = filter::filter_action(chain->chain, scene->scene, joints(q), action, p);
    Eigen::Map<kin::Vector7>{result->dq} = r.dq_safe;
    result->gripper = r.gripper;
    result->intervened = r.intervened;
    result->recovery = r.status == filter::FilterStatus::UnsafeStartRecovery;
    result->tracking_error = r.tracking_error;
    result->barrier_before = r.barrier_before;
    result->barrier_after = r.barrier_after;
    result->iterations = r.solver.iterations;
    result->num_cbf_rows = r.solver.num_cbf_rows;
    result->num_active_rows = static_cast<int>(r.active_constraints.size());
  });
}

cbfs_status cbfs_scenario_load_file(const char* path, cbfs_scenario** out) {
  return guarded([&] {
    require(path && out, "path and out");
    *out = new cbfs_scenario{sim::load_scenario_file(path)};
  });
}

void cbfs_scenario_free(cbfs_scenario* scenario) { delete scenario; }

cbfs_status cbfs_scenario_set_seed(cbfs_scenario* scenario, uint64_t seed) {
  return guarded([&] {
    require(scenario, "scenario");
    scenario->scenario.config.seed = seed;
  });
}

cbfs_status cbfs_scenario_set_filter_enabled(cbfs_scenario* scenario, int enabled) {
  return guarded([&] {
    require(scenario, "scenario");
    scenario->scenario.config.filter_enabled = enabled != 0;
  });
}

cbfs_status cbfs_scenario_name(const cbfs_scenario* scenario, char** out) {
  return guarded([&] {
    require(scenario && out, "scenario and out");
    *out = dup_string(scenario->scenario.config.name);
  });
}

cbfs_status cbfs_episode_run(const cbfs_scenario* scenario, cbfs_log** out) {
  return guarded([&] {
    require(scenario && out, "scenario and out");
    *out = new cbfs_log{sim::run_episode(scenario->scenario)};
  });
}

cbfs_status cbfs_batch_run(const cbfs_scenario* scenario, uint64_t first_seed, int count, int threads,
                           cbfs_batch_result* result) {
  return guarded([&] {
    require(scenario && result, "scenario and result");
    const auto batch = sim::run_batch(scenario->scenario, first_seed, count, threads);
    result->episodes = static_cast<int>(batch.summaries.size());
    result->total_violations = batch.total_violations;
    result->worst_min_barrier = batch.worst_min_barrier;
  });
}

cbfs_status cbfs_log_load_file(const char* path, cbfs_log** out) {
  return guarded([&] {
    require(path && out, "path and out");
    *out = new cbfs_log{sim::log_from_json(read_file(path))};
  });
}

void cbfs_log_free(cbfs_log* log) { delete log; }

cbfs_status cbfs_log_summary(const cbfs_log* log, cbfs_summary* summary) {
  return guarded([&] {
    require(log && summary, "log and summary");
    const auto& s = log->log.summary;
    summary->min_barrier = s.min_barrier;
    summary->violation_count = s.violation_count;
    summary->intervention_rate = s.intervention_rate;
    summary->mean_tracking_error = s.mean_tracking_error;
    Eigen::Map<Eigen::Vector3d>{summary->final_ee_position} = s.final_ee_position;
    summary->filter_error_count = s.filter_error_count;
    summary->record_count = static_cast<int>(log->log.records.size());
    summary->filter_enabled = log->log.filter_enabled;
  });
}

cbfs_status cbfs_log_to_json(const cbfs_log* log, char** out) {
  return guarded([&] {
    require(log && out, "log and out");
    *out = dup_string(sim::log_to_json(log->log));
  });
}

cbfs_status cbfs_log_to_csv(const cbfs_log* log, char** out) {
  return guarded([&] {
    require(log && out, "log and out");
    *out = dup_string(sim::log_to_csv(log->log));
  });
}

cbfs_status cbfs_compare_logs(const cbfs_log* a, const cbfs_log* b, char** json, char** text) {
  return guarded([&] {
    require(a && b, "logs");
    const bool a_with = a->log.filter_enabled;
    const auto report = a_with ? sim::compare_runs(a->log, b->log) : sim::compare_runs(b->log, a->log);
    std::unique_ptr<char, decltype(&std::free)> j(json ? dup_string(report.to_json()) : nullptr, &std::free);
    if (text) *text = dup_string(report.to_text());
    if (json) *json = j.release();
  });
}

cbfs_status cbfs_fixtures_emit(const char* dir, size_t* files_written) {
  return guarded([&] {
    require(dir, "dir");
    const auto written = sim::emit_fixtures(dir);
    if (files_written) *files_written = written.size();
  });
}

cbfs_status cbfs_depth_to_turbo(const float* depth, int width, int height, double max_range, uint8_t* rgb) {
  return guarded([&] {
    require(depth, "depth");
    check_image_args(width, height, rgb);
    const std::size_t n = static_cast<std::size_t>(width) * height;
    const auto image = encoding::depth_to_turbo(encoding::DepthMap(width, height, {depth, depth + n}), max_range);
    std::memcpy(rgb, image.pixels.data(), image.pixels.size());
  });
}

cbfs_status cbfs_zero_mask(int width, int height, uint8_t* rgb) {
  return guarded([&] {
    check_image_args(width, height, rgb);
    const auto image = encoding::zero_mask_image(width, height);
    std::memcpy(rgb, image.pixels.data(), image.pixels.size());
  });
}

cbfs_status cbfs_metrics_json(const char* map_path, const char* reference_path, const char* mask_path, char** out) {
  return guarded([&] {
    require(map_path && out, "map_path and out");
    const auto map = saliency::map_from_grid(saliency::read_grid(map_path));
    nlohmann::ordered_json j;
    j["entropy"] = saliency::normalized_entropy(map);
    if (reference_path)
      j["pearson"] = saliency::pearson_alignment(map, saliency::map_from_grid(saliency::read_grid(reference_path)));
    if (mask_path) j["mass"] = saliency::attention_mass(map, saliency::mask_from_grid(saliency::read_grid(mask_path)));
    *out = dup_string(j.dump());
  });
}

}  // extern "C"
