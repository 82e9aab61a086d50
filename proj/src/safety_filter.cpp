#include "cbfshield/safety_filter.hpp"

#include "cbfshield/error.hpp"

#include <cmath>
#include <numbers>

namespace cbfshield::filter {

void ActionCommand::validate() const {
  if (!translation.allFinite() || !rotation.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "action has non-finite entries");
  }
  if (!(rotation.norm() < std::numbers::pi)) throw Error(ErrorCode::InvalidArgument, "action rotation must be < pi");
}

Vector6 ActionCommand::twist() const {
  Vector6 u;
  u << translation, rotation;
  return u;
}

void FilterParams::validate() const {
  if (!(lambda > 0.0)) throw Error(ErrorCode::Validation, "lambda must be > 0", "filter.lambda");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw Error(ErrorCode::Validation, "gamma must be in (0, 1]", "filter.gamma");
  if (!(activation_distance > 0.0)) {
    throw Error(ErrorCode::Validation, "activation_distance must be > 0", "filter.activation_distance");
  }
  if (!(step_cap > 0.0)) throw Error(ErrorCode::Validation, "step_cap must be > 0", "filter.step_cap");
  if (!(qp_tol > 0.0)) throw Error(ErrorCode::Validation, "qp_tol must be > 0", "filter.qp_tol");
  if (qp_max_iter < 1) throw Error(ErrorCode::Validation, "qp_max_iter must be >= 1", "filter.qp_max_iter");
}

Vector7 damped_least_squares(const kin::JacobianMatrix& jac, const Vector6& u, double lambda) {
  const kin::Matrix7 H = jac.transpose() * jac + lambda * kin::Matrix7::Identity();
  return H.llt().solve(jac.transpose() * u);
}

FilterProblem build_filter_problem(const kin::KinematicChain& chain, const collision::CollisionScene& scene,
                                   const kin::JointConfig& q, const ActionCommand& action, const FilterParams& params) {
  const kin::FrameList frames = kin::forward_kinematics(chain, q);
  FilterProblem out;
  out.jacobian = kin::geometric_jacobian(chain, frames);
  out.barrier = collision::evaluate_barrier(chain, frames, scene);

  const Vector6 u = action.twist();
  const kin::JacobianMatrix& J = out.jacobian;
  qp::QpProblem& p = out.problem;
  p.H = J.transpose() * J + params.lambda * kin::Matrix7::Identity();
  p.H = 0.5 * (p.H + p.H.transpose());
  p.f = -(J.transpose() * u);

  const auto& limits = chain.limits();
  p.lo = (limits.lower - q.angles()).cwiseMax(-params.step_cap);
  p.hi = (limits.upper - q.angles()).cwiseMin(params.step_cap);

  auto add_row = [&](const collision::PairEvaluation& pair) {
    p.ineq.push_back({pair.gradient, -params.gamma * pair.value});
    out.cbf_row_ids.push_back(pair.sphere_id + "|" + pair.obstacle_id);
  };
  if (params.mode == ConstraintMode::SingleMin) {
    if (const auto* active = out.barrier.active()) add_row(*active);
  } else {
    for (const auto& pair : out.barrier.per_pair) {
      if (pair.value < params.activation_distance) add_row(pair);
    }
  }
  return out;
}

FilterResult filter_action(const kin::KinematicChain& chain, const collision::CollisionScene& scene,
                           const kin::JointConfig& q, const ActionCommand& action, const FilterParams& params,
                           FilterWorkspace* workspace) {
  params.validate();
  action.validate();
  if (!chain.limits().contains(q.angles(), 1e-6)) {
    throw Error(ErrorCode::InvalidArgument, "joint configuration is outside the joint limits");
  }

  FilterProblem fp = build_filter_problem(chain, scene, q, action, params);
  FilterResult res;
  res.gripper = action.gripper;
  res.barrier_before = fp.barrier.value;
  const Vector6 u = action.twist();

  if (fp.barrier.has_pairs() && fp.barrier.value < 0.0) {
    // Recovery: argmax ∇hᵀdq over the box is a corner choice per coordinate.
    const Vector7& g = fp.barrier.gradient;
    for (int i = 0; i < kin::kNumJoints; ++i) {
      res.dq_safe[i] = g[i] > 0.0 ? fp.problem.hi[i] : (g[i] < 0.0 ? fp.problem.lo[i] : 0.0);
    }
    res.status = FilterStatus::UnsafeStartRecovery;
    res.intervened = true;
    const auto* active = fp.barrier.active();
    res.active_constraints.push_back(active->sphere_id + "|" + active->obstacle_id);
  } else {
    qp::QpSettings settings;
    settings.tol = params.qp_tol;
    settings.max_iter = params.qp_max_iter;
    const qp::QpSolution sol = qp::solve_qp(fp.problem, settings, workspace ? &workspace->qp : nullptr);
    res.dq_safe = sol.x;
    res.solver = {sol.iterations, sol.kkt_residual, sol.objective, static_cast<int>(fp.problem.ineq.size())};
    for (const auto& id : sol.active_set) {
      if (id.kind == qp::ConstraintId::Kind::Inequality) res.active_constraints.push_back(fp.cbf_row_ids[id.index]);
    }
    // Tracking degradation is measured against the unconstrained damped
    // least-squares step, which never tracks u exactly when λ > 0.
    const Vector7 free_step = damped_least_squares(fp.jacobian, u, params.lambda);
    const double degradation = (fp.jacobian * (res.dq_safe - free_step)).norm();
    res.intervened = !res.active_constraints.empty() || degradation > 1e-6 * (1.0 + u.norm());
  }
  res.solver.num_cbf_rows = static_cast<int>(fp.problem.ineq.size());
  res.tracking_error = (fp.jacobian * res.dq_safe - u).norm();
  const kin::JointConfig next(q.angles() + res.dq_safe);
  res.barrier_after = collision::evaluate_barrier(chain, next, scene).value;
  return res;
}

}  // namespace cbfshield::filter
