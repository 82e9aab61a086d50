#include "cbfshield/kinematics.hpp"

#include "cbfshield/error.hpp"

#include <cmath>

namespace cbfshield::kin {

JointConfig::JointConfig(const Vector7& angles) : angles_(angles) {
  for (int i = 0; i < kNumJoints; ++i) {
    if (!std::isfinite(angles[i])) {
      throw Error(ErrorCode::InvalidArgument, "joint angle " + std::to_string(i) + " is not finite");
    }
  }
}

void JointLimits::validate() const {
  for (int i = 0; i < kNumJoints; ++i) {
    if (!(lower[i] < upper[i])) {
      throw Error(ErrorCode::Validation, "limit ordering: lower must be < upper",
                  "limits.lower[" + std::to_string(i) + "]");
    }
  }
}

bool JointLimits::contains(const Vector7& q, double tol) const {
  for (int i = 0; i < kNumJoints; ++i) {
    if (q[i] < lower[i] - tol || q[i] > upper[i] + tol) return false;
  }
  return true;
}

RigidTransform RigidTransform::from_rpy(const Eigen::Vector3d& rpy, const Eigen::Vector3d& translation) {
  RigidTransform t;
  t.rotation = (Eigen::AngleAxisd(rpy.z(), Eigen::Vector3d::UnitZ()) *
                Eigen::AngleAxisd(rpy.y(), Eigen::Vector3d::UnitY()) *
                Eigen::AngleAxisd(rpy.x(), Eigen::Vector3d::UnitX()))
                   .toRotationMatrix();
  t.translation = translation;
  return t;
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

Eigen::Vector3d RigidTransform::rpy() const {
  const Eigen::Matrix3d& r = rotation;
  const double pitch = std::atan2(-r(2, 0), std::hypot(r(0, 0), r(1, 0)));
  if (std::abs(std::cos(pitch)) < 1e-9) {
    // Gimbal lock: fold yaw into roll.
    return {std::atan2(-r(1, 2), r(1, 1)), pitch, 0.0};
  }
  return {std::atan2(r(2, 1), r(2, 2)), pitch, std::atan2(r(1, 0), r(0, 0))};
}

bool RigidTransform::is_proper(double tol) const {
  const double ortho = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return ortho < tol && std::abs(rotation.determinant() - 1.0) < tol && translation.allFinite();
}

KinematicChain::KinematicChain(std::string name, std::array<Joint, kNumJoints> joints,
                               RigidTransform base_frame, RigidTransform flange_offset, JointLimits limits)
    : name_(std::move(name)),
      joints_(std::move(joints)),
      base_frame_(base_frame),
      flange_offset_(flange_offset),
      limits_(std::move(limits)) {
  limits_.validate();
  for (int i = 0; i < kNumJoints; ++i) {
    const std::string path = "joints[" + std::to_string(i) + "]";
    if (!joints_[i].fixed_transform.is_proper()) {
      throw Error(ErrorCode::Validation, "not a proper rigid transform", path + ".fixed_transform");
    }
    const double n = joints_[i].axis.norm();
    if (!(std::abs(n - 1.0) < 1e-9)) throw Error(ErrorCode::Validation, "axis must be a unit vector", path + ".axis");
  }
  if (!base_frame_.is_proper()) throw Error(ErrorCode::Validation, "not a proper rigid transform", "base_frame");
  if (!flange_offset_.is_proper()) throw Error(ErrorCode::Validation, "not a proper rigid transform", "flange_offset");
}

KinematicChain KinematicChain::with_base_frame(const RigidTransform& base) const {
  return KinematicChain(name_, joints_, base, flange_offset_, limits_);
}

FrameList forward_kinematics(const KinematicChain& chain, const JointConfig& q) {
  FrameList frames;
  RigidTransform current = chain.base_frame();
  for (int i = 0; i < kNumJoints; ++i) {
    const Joint& joint = chain.joints()[i];
    RigidTransform motion;
    motion.rotation = Eigen::AngleAxisd(q[i], joint.axis).toRotationMatrix();
    current = current * joint.fixed_transform * motion;
    frames[i] = current;
  }
  frames[kFlangeFrame] = current * chain.flange_offset();
  return frames;
}

Eigen::Vector3d joint_axis_world(const KinematicChain& chain, const FrameList& frames, int joint) {
  return frames[joint].rotation * chain.joints()[joint].axis;
}

PointJacobian point_jacobian(const KinematicChain& chain, const FrameList& frames, int link_index,
                             const Eigen::Vector3d& local_point) {
  if (link_index < 0 || link_index > kFlangeFrame) {
    throw Error(ErrorCode::InvalidArgument, "link_index " + std::to_string(link_index) + " out of range [0, 7]");
  }
  if (!local_point.allFinite()) throw Error(ErrorCode::InvalidArgument, "local_point is not finite");
  const Eigen::Vector3d p = frames[link_index].apply(local_point);
  PointJacobian jac = PointJacobian::Zero();
  const int last = std::min(link_index, kNumJoints - 1);
  for (int j = 0; j <= last; ++j) {
    jac.col(j) = joint_axis_world(chain, frames, j).cross(p - frames[j].translation);
  }
  return jac;
}

PointJacobian point_jacobian(const KinematicChain& chain, const JointConfig& q, int link_index,
                             const Eigen::Vector3d& local_point) {
  return point_jacobian(chain, forward_kinematics(chain, q), link_index, local_point);
}

JacobianMatrix geometric_jacobian(const KinematicChain& chain, const FrameList& frames) {
  JacobianMatrix jac;
  const Eigen::Vector3d& p_ee = frames[kFlangeFrame].translation;
  for (int j = 0; j < kNumJoints; ++j) {
    const Eigen::Vector3d z = joint_axis_world(chain, frames, j);
    jac.block<3, 1>(0, j) = z.cross(p_ee - frames[j].translation);
    jac.block<3, 1>(3, j) = z;
  }
  return jac;
}

JacobianMatrix geometric_jacobian(const KinematicChain& chain, const JointConfig& q) {
  return geometric_jacobian(chain, forward_kinematics(chain, q));
}

JacobianMatrix flange_jacobian(const KinematicChain& chain, const JointConfig& q) {
  const FrameList frames = forward_kinematics(chain, q);
  JacobianMatrix jac = geometric_jacobian(chain, frames);
  const Eigen::Matrix3d rt = frames[kFlangeFrame].rotation.transpose();
  jac.topRows<3>() = rt * jac.topRows<3>();
  jac.bottomRows<3>() = rt * jac.bottomRows<3>();
  return jac;
}

}  // namespace cbfshield::kin
