#pragma once

#include "cbfshield/collision.hpp"
#include "cbfshield/kinematics.hpp"
#include "cbfshield/qp.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace cbfshield::filter {

using kin::Vector6;
using kin::Vector7;

/// Policy output: Cartesian delta pose in the base frame plus gripper bit.
struct ActionCommand {
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();  // m
  Eigen::Vector3d rotation = Eigen::Vector3d::Zero();     // axis-angle, rad
  bool gripper = false;

  /// Throws InvalidArgument on non-finite entries or |rotation| >= pi.
  void validate() const;
  Vector6 twist() const;
  ActionCommand scaled(double factor) const { return {translation * factor, rotation * factor, gripper}; }
};

enum class ConstraintMode {
  /// One CBF row per sphere/obstacle pair closer than activation_distance.
  PerPair,
  /// A single row on the minimum pair (literal h_col).
  SingleMin,
};

struct FilterParams {
  double lambda = 1e-3;
  double gamma = 0.5;
  double activation_distance = 0.15;
  double step_cap = 0.02;
  double qp_tol = 1e-9;
  int qp_max_iter = 100;
  ConstraintMode mode = ConstraintMode::PerPair;

  void validate() const;
};

enum class FilterStatus {
  Ok,
  /// Start state had h_col < 0; dq_safe is the recovery step.
  UnsafeStartRecovery,
};

struct SolverStats {
  int iterations = 0;
  double kkt_residual = 0.0;
  double objective = 0.0;
  int num_cbf_rows = 0;
};

struct FilterResult {
  FilterStatus status = FilterStatus::Ok;
  Vector7 dq_safe = Vector7::Zero();
  bool gripper = false;
  bool intervened = false;
  double tracking_error = 0.0;  // |J dq_safe - u|
  double barrier_before = 0.0;
  double barrier_after = 0.0;
  /// "sphere|obstacle" ids of CBF rows active at the solution.
  std::vector<std::string> active_constraints;
  SolverStats solver;
};

/// Per-controller state: QP scratch and the warm-start hint. Not thread safe.
struct FilterWorkspace {
  qp::QpWorkspace qp;
};

/// Unconstrained damped least-squares step (JᵀJ + λI)⁻¹ Jᵀu.
Vector7 damped_least_squares(const kin::JacobianMatrix& jac, const Vector6& u, double lambda);

/// One control step of the CBF-QP:
///   min |J dq - u|² + λ|dq|²
///   s.t. ∇h_pairᵀ dq >= -γ h_pair   (each active pair)
///        max(q_min - q, -cap) <= dq <= min(q_max - q, cap)
/// The gripper bit is copied through. An unsafe start (h < 0) returns the
/// box-constrained step that maximizes ∇h_colᵀ dq, flagged
/// UnsafeStartRecovery. Solver failures propagate as qp::QpError.
FilterResult filter_action(const kin::KinematicChain& chain, const collision::CollisionScene& scene,
                           const kin::JointConfig& q, const ActionCommand& action, const FilterParams& params,
                           FilterWorkspace* workspace = nullptr);

/// The QP assembled for a given state; exposed for inspection and tests.
struct FilterProblem {
  qp::QpProblem problem;
  std::vector<std::string> cbf_row_ids;
  collision::BarrierEvaluation barrier;
  kin::JacobianMatrix jacobian;
};
FilterProblem build_filter_problem(const kin::KinematicChain& chain, const collision::CollisionScene& scene,
                                   const kin::JointConfig& q, const ActionCommand& action, const FilterParams& params);

}  // namespace cbfshield::filter
