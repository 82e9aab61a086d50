#pragma once

#include "cbfshield/kinematics.hpp"

#include <Eigen/Dense>

#include <limits>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cbfshield::collision {

using kin::Vector7;

/// Sphere rigidly attached to a link frame (0..6) or the flange (7).
struct CollisionSphere {
  std::string id;
  int link_index = 0;
  Eigen::Vector3d local_center = Eigen::Vector3d::Zero();
  double radius = 0.0;
};

/// Safe side is normal·x >= offset.
struct HalfSpace {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double offset = 0.0;
};

/// Axis-aligned box.
struct Box {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d half_extents = Eigen::Vector3d::Ones();
};

/// Capped cylinder with a world-vertical axis; `axis_point` is its center.
struct VerticalCylinder {
  Eigen::Vector3d axis_point = Eigen::Vector3d::Zero();
  double radius = 0.0;
  double half_height = 0.0;
};

struct Sphere {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 0.0;
};

using Shape = std::variant<HalfSpace, Box, VerticalCylinder, Sphere>;

struct Obstacle {
  std::string id;
  Shape shape;

  /// Throws Validation on non-unit normals or non-positive sizes.
  void validate(const std::string& path = "obstacle") const;
};

std::string_view kind_name(const Shape& shape);

struct PairDistance {
  double distance = 0.0;          // signed surface distance minus sphere radius
  Eigen::Vector3d direction;      // unit gradient of the center distance field
};

/// Distance between a sphere and an obstacle. Negative inside. On a distance
/// field singularity (box center, cylinder axis, sphere center) the direction
/// defaults to world +z.
PairDistance pair_distance(const Eigen::Vector3d& sphere_world_center, double sphere_radius,
                           const Obstacle& obstacle);

/// Signed distance from a point to the obstacle surface (no sphere radius).
PairDistance signed_distance(const Eigen::Vector3d& point, const Shape& shape);

class CollisionScene {
 public:
  CollisionScene() = default;
  CollisionScene(std::vector<CollisionSphere> spheres, std::vector<Obstacle> obstacles, double margin);

  const std::vector<CollisionSphere>& spheres() const { return spheres_; }
  const std::vector<Obstacle>& obstacles() const { return obstacles_; }
  double margin() const { return margin_; }

  CollisionScene with_margin(double margin) const { return {spheres_, obstacles_, margin}; }
  CollisionScene with_obstacles(std::vector<Obstacle> obstacles) const { return {spheres_, std::move(obstacles), margin_}; }

 private:
  std::vector<CollisionSphere> spheres_;
  std::vector<Obstacle> obstacles_;
  double margin_ = 0.0;
};

struct PairEvaluation {
  std::string sphere_id;
  std::string obstacle_id;
  double value = 0.0;   // pair distance minus margin
  Vector7 gradient = Vector7::Zero();
};

/// h_col(q) and its gradient. With no pairs the value is +inf and the
/// gradient zero.
struct BarrierEvaluation {
  double value = std::numeric_limits<double>::infinity();
  Vector7 gradient = Vector7::Zero();
  int active_pair = -1;  // index into per_pair
  std::vector<PairEvaluation> per_pair;

  bool has_pairs() const { return active_pair >= 0; }
  const PairEvaluation* active() const { return has_pairs() ? &per_pair[active_pair] : nullptr; }
};

BarrierEvaluation evaluate_barrier(const kin::KinematicChain& chain, const kin::JointConfig& q,
                                   const CollisionScene& scene);
BarrierEvaluation evaluate_barrier(const kin::KinematicChain& chain, const kin::FrameList& frames,
                                   const CollisionScene& scene);

/// Log-sum-exp smoothing of the pairwise minimum at temperature beta:
/// -1/beta * log(sum exp(-beta h_i)), gradient weighted by the softmin weights.
/// Always <= the hard minimum.
struct SmoothBarrier {
  double value;
  Vector7 gradient;
};
SmoothBarrier soft_min_barrier(const BarrierEvaluation& eval, double beta);

// Scene documents (JSON): {spheres[], obstacles[], margin}.
CollisionScene load_scene(std::string_view json_text);
CollisionScene load_scene_file(const std::string& path);
std::string scene_to_json(const CollisionScene& scene);

/// Ten-sphere layout covering the Panda links, 0.05-0.09 m radii.
std::vector<CollisionSphere> panda_default_spheres();

}  // namespace cbfshield::collision
