#pragma once

#include <Eigen/Dense>

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace cbfshield::kin {

inline constexpr int kNumJoints = 7;
/// Link frames 0..6 follow joints 0..6; frame 7 is the flange.
inline constexpr int kNumFrames = kNumJoints + 1;
inline constexpr int kFlangeFrame = kNumJoints;

using Vector7 = Eigen::Matrix<double, kNumJoints, 1>;
using Matrix7 = Eigen::Matrix<double, kNumJoints, kNumJoints>;
using Vector6 = Eigen::Matrix<double, 6, 1>;
using JacobianMatrix = Eigen::Matrix<double, 6, kNumJoints>;
using PointJacobian = Eigen::Matrix<double, 3, kNumJoints>;

/// Joint positions in radians. Always 7 finite entries.
class JointConfig {
 public:
  JointConfig() : angles_(Vector7::Zero()) {}
  explicit JointConfig(const Vector7& angles);

  static JointConfig zeros() { return JointConfig(); }

  const Vector7& angles() const { return angles_; }
  double operator[](int i) const { return angles_[i]; }

 private:
  Vector7 angles_;
};

struct JointLimits {
  Vector7 lower;
  Vector7 upper;

  /// Throws Validation unless lower[i] < upper[i] for every joint.
  void validate() const;
  bool contains(const Vector7& q, double tol = 0.0) const;
};

/// Proper rigid motion: rotation is orthonormal with det +1.
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static RigidTransform identity() { return {}; }
  /// Roll-pitch-yaw about fixed axes: R = Rz(yaw) Ry(pitch) Rx(roll).
  static RigidTransform from_rpy(const Eigen::Vector3d& rpy, const Eigen::Vector3d& translation);

  RigidTransform operator*(const RigidTransform& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.translation + translation};
  }
  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }
  RigidTransform inverse() const {
    return {rotation.transpose(), -(rotation.transpose() * translation)};
  }
  Eigen::Matrix4d matrix() const;
  Eigen::Vector3d rpy() const;

  /// max |RᵀR - I| and |det R - 1| both below tol.
  bool is_proper(double tol = 1e-9) const;
};

struct Joint {
  std::string name;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();  // unit, in the joint frame
  RigidTransform fixed_transform;                   // parent frame -> joint frame
};

/// Immutable 7-DOF revolute chain.
class KinematicChain {
 public:
  KinematicChain(std::string name, std::array<Joint, kNumJoints> joints, RigidTransform base_frame,
                 RigidTransform flange_offset, JointLimits limits);

  const std::string& name() const { return name_; }
  const std::array<Joint, kNumJoints>& joints() const { return joints_; }
  const RigidTransform& base_frame() const { return base_frame_; }
  const RigidTransform& flange_offset() const { return flange_offset_; }
  const JointLimits& limits() const { return limits_; }

  /// Copy with a different base placement.
  KinematicChain with_base_frame(const RigidTransform& base) const;

 private:
  std::string name_;
  std::array<Joint, kNumJoints> joints_;
  RigidTransform base_frame_;
  RigidTransform flange_offset_;
  JointLimits limits_;
};

using FrameList = std::array<RigidTransform, kNumFrames>;

/// World frames of links 0..6 and the flange.
FrameList forward_kinematics(const KinematicChain& chain, const JointConfig& q);

/// Flange geometric Jacobian in the world (base) frame. Rows 0..2 linear, 3..5 angular.
JacobianMatrix geometric_jacobian(const KinematicChain& chain, const JointConfig& q);
JacobianMatrix geometric_jacobian(const KinematicChain& chain, const FrameList& frames);

/// Same Jacobian with both blocks expressed in the flange frame.
JacobianMatrix flange_jacobian(const KinematicChain& chain, const JointConfig& q);

/// Linear Jacobian of a point rigidly attached to frame `link_index` (0..7).
PointJacobian point_jacobian(const KinematicChain& chain, const JointConfig& q, int link_index,
                             const Eigen::Vector3d& local_point);
PointJacobian point_jacobian(const KinematicChain& chain, const FrameList& frames, int link_index,
                             const Eigen::Vector3d& local_point);

/// World axis of joint i given the frame list.
Eigen::Vector3d joint_axis_world(const KinematicChain& chain, const FrameList& frames, int joint);

// Configuration documents (JSON). Errors carry the offending field path.

struct ChainDocument {
  KinematicChain chain;
  JointConfig reference_q;
  RigidTransform reference_flange;
};

ChainDocument parse_chain_document(std::string_view json_text);
KinematicChain load_chain(std::string_view json_text);
KinematicChain load_chain_file(const std::string& path);

/// The Franka Panda description bundled with the library.
const std::string& bundled_panda_config();
const KinematicChain& panda_chain();

/// Home configuration used by the bundled reference block.
JointConfig panda_home();

}  // namespace cbfshield::kin
