/* C interface to the cbfshield library.
 *
 * Every function returns a cbfs_status. On failure the message of the most
 * recent error on the calling thread is available from cbfs_last_error().
 * Strings handed out by the library are released with cbfs_string_free().
 * Matrices are row-major.
 */
#ifndef CBFSHIELD_H
#define CBFSHIELD_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(CBFS_BUILDING_LIBRARY)
#    define CBFS_API __declspec(dllexport)
#  else
#    define CBFS_API __declspec(dllimport)
#  endif
#else
#  define CBFS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

#define CBFS_NUM_JOINTS 7
#define CBFS_NUM_FRAMES 8

typedef enum cbfs_status {
  CBFS_OK = 0,
  CBFS_ERR_INVALID_ARGUMENT = 1,
  CBFS_ERR_PARSE = 2,
  CBFS_ERR_VALIDATION = 3,
  CBFS_ERR_INFEASIBLE = 4,
  CBFS_ERR_MAX_ITERATIONS = 5,
  CBFS_ERR_IO = 6,
  CBFS_ERR_DIMENSION_MISMATCH = 7,
  CBFS_ERR_ZERO_VARIANCE = 8,
  CBFS_ERR_INTERNAL = 9
} cbfs_status;

typedef struct cbfs_chain cbfs_chain;
typedef struct cbfs_scene cbfs_scene;
typedef struct cbfs_scenario cbfs_scenario;
typedef struct cbfs_log cbfs_log;

typedef enum cbfs_constraint_mode { CBFS_MODE_PER_PAIR = 0, CBFS_MODE_SINGLE_MIN = 1 } cbfs_constraint_mode;

typedef struct cbfs_filter_params {
  double lambda;
  double gamma;
  double activation_distance;
  double step_cap;
  double qp_tol;
  int qp_max_iter;
  cbfs_constraint_mode mode;
} cbfs_filter_params;

typedef struct cbfs_filter_result {
  double dq[CBFS_NUM_JOINTS];
  int gripper;
  int intervened;
  int recovery; /* start state was unsafe; dq is the recovery step */
  double tracking_error;
  double barrier_before;
  double barrier_after;
  int iterations;
  int num_cbf_rows;
  int num_active_rows;
} cbfs_filter_result;

typedef struct cbfs_summary {
  double min_barrier;
  int violation_count;
  double intervention_rate;
  double mean_tracking_error;
  double final_ee_position[3];
  int filter_error_count;
  int record_count;
  int filter_enabled;
} cbfs_summary;

typedef struct cbfs_batch_result {
  int episodes;
  int total_violations;
  double worst_min_barrier;
} cbfs_batch_result;

CBFS_API const char* cbfs_version(void);
CBFS_API const char* cbfs_status_name(cbfs_status status);
CBFS_API const char* cbfs_last_error(void);
CBFS_API void cbfs_string_free(char* str);

/* Kinematic chain */
CBFS_API cbfs_status cbfs_chain_bundled(cbfs_chain** out);
CBFS_API cbfs_status cbfs_chain_load_file(const char* path, cbfs_chain** out);
CBFS_API cbfs_status cbfs_chain_load_string(const char* json, cbfs_chain** out);
CBFS_API void cbfs_chain_free(cbfs_chain* chain);
CBFS_API cbfs_status cbfs_chain_limits(const cbfs_chain* chain, double lower[7], double upper[7]);
/* frames: 8 homogeneous 4x4 transforms (links 0..6, then the flange). */
CBFS_API cbfs_status cbfs_forward_kinematics(const cbfs_chain* chain, const double q[7], double frames[8 * 16]);
/* Flange geometric Jacobian in the base frame: 6x7, linear rows first. */
CBFS_API cbfs_status cbfs_jacobian(const cbfs_chain* chain, const double q[7], double jacobian[6 * 7]);

/* Collision scene */
CBFS_API cbfs_status cbfs_scene_load_file(const char* path, cbfs_scene** out);
CBFS_API cbfs_status cbfs_scene_load_string(const char* json, cbfs_scene** out);
CBFS_API void cbfs_scene_free(cbfs_scene* scene);
/* value is +inf when the scene has no obstacles; gradient may be NULL. */
CBFS_API cbfs_status cbfs_barrier(const cbfs_chain* chain, const cbfs_scene* scene, const double q[7], double* value,
                                  double gradient[7]);

/* Safety filter */
CBFS_API void cbfs_filter_params_default(cbfs_filter_params* params);
CBFS_API cbfs_status cbfs_filter_action(const cbfs_chain* chain, const cbfs_scene* scene, const double q[7],
                                        const double translation[3], const double rotation[3], int gripper,
                                        const cbfs_filter_params* params, cbfs_filter_result* result);

/* Scenarios and episodes */
CBFS_API cbfs_status cbfs_scenario_load_file(const char* path, cbfs_scenario** out);
CBFS_API void cbfs_scenario_free(cbfs_scenario* scenario);
CBFS_API cbfs_status cbfs_scenario_set_seed(cbfs_scenario* scenario, uint64_t seed);
CBFS_API cbfs_status cbfs_scenario_set_filter_enabled(cbfs_scenario* scenario, int enabled);
CBFS_API cbfs_status cbfs_scenario_name(const cbfs_scenario* scenario, char** out);
CBFS_API cbfs_status cbfs_episode_run(const cbfs_scenario* scenario, cbfs_log** out);
CBFS_API cbfs_status cbfs_batch_run(const cbfs_scenario* scenario, uint64_t first_seed, int count, int threads,
                                    cbfs_batch_result* result);

CBFS_API cbfs_status cbfs_log_load_file(const char* path, cbfs_log** out);
CBFS_API void cbfs_log_free(cbfs_log* log);
CBFS_API cbfs_status cbfs_log_summary(const cbfs_log* log, cbfs_summary* summary);
CBFS_API cbfs_status cbfs_log_to_json(const cbfs_log* log, char** out);
CBFS_API cbfs_status cbfs_log_to_csv(const cbfs_log* log, char** out);
/* Accepts the two logs in either order; exactly one must have the filter on. */
CBFS_API cbfs_status cbfs_compare_logs(const cbfs_log* a, const cbfs_log* b, char** json, char** text);

/* Writes chain, scene and scenario files for every shipped fixture. */
CBFS_API cbfs_status cbfs_fixtures_emit(const char* dir, size_t* files_written);

/* Encoding: rgb holds 3 * width * height bytes. */
CBFS_API cbfs_status cbfs_depth_to_turbo(const float* depth, int width, int height, double max_range, uint8_t* rgb);
CBFS_API cbfs_status cbfs_zero_mask(int width, int height, uint8_t* rgb);

/* Saliency metrics on grid files; reference_path and mask_path may be NULL.
 * Produces {"entropy": ..., "pearson": ..., "mass": ...}. */
CBFS_API cbfs_status cbfs_metrics_json(const char* map_path, const char* reference_path, const char* mask_path,
                                       char** out);

#ifdef __cplusplus
}
#endif

#endif /* CBFSHIELD_H */
