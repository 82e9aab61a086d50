#include "cbfshield/collision.hpp"

#include "cbfshield/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

namespace cbfshield::collision {

namespace {

const Eigen::Vector3d kSingularDirection = Eigen::Vector3d::UnitZ();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double sign_or_plus(double v) { return v < 0.0 ? -1.0 : 1.0; }

PairDistance box_distance(const Eigen::Vector3d& p, const Box& box) {
  const Eigen::Vector3d rel = p - box.center;
  const Eigen::Vector3d excess = rel.cwiseAbs() - box.half_extents;
  const Eigen::Vector3d outside = excess.cwiseMax(0.0);
  const double outside_norm = outside.norm();
  if (outside_norm > 0.0) {
    Eigen::Vector3d dir;
    for (int i = 0; i < 3; ++i) dir[i] = sign_or_plus(rel[i]) * outside[i];
    return {outside_norm, dir / outside_norm};
  }
  // Inside or on the surface: nearest face is the one with the largest excess.
  // Ties prefer z, then y, then x.
  int axis = 2;
  for (int i = 1; i >= 0; --i) {
    if (excess[i] > excess[axis]) axis = i;
  }
  if (rel[axis] == 0.0) return {excess[axis], kSingularDirection};
  Eigen::Vector3d dir = Eigen::Vector3d::Zero();
  dir[axis] = sign_or_plus(rel[axis]);
  return {excess[axis], dir};
}

PairDistance cylinder_distance(const Eigen::Vector3d& p, const VerticalCylinder& cyl) {
  const Eigen::Vector3d rel = p - cyl.axis_point;
  const double radial_len = std::hypot(rel.x(), rel.y());
  const double dr = radial_len - cyl.radius;
  const double dz = std::abs(rel.z()) - cyl.half_height;
  const Eigen::Vector3d e_z(0.0, 0.0, sign_or_plus(rel.z()));
  const bool on_axis = radial_len == 0.0;
  const Eigen::Vector3d e_r =
      on_axis ? Eigen::Vector3d(Eigen::Vector3d::Zero()) : Eigen::Vector3d(Eigen::Vector3d(rel.x(), rel.y(), 0.0) / radial_len);

  if (dr > 0.0 && dz > 0.0) {
    const double d = std::hypot(dr, dz);
    return {d, (dr * e_r + dz * e_z) / d};
  }
  if (dr > 0.0) return {dr, e_r};
  if (dz > 0.0) return {dz, e_z};
  if (dr > dz) {
    if (on_axis) return {dr, kSingularDirection};
    return {dr, e_r};
  }
  if (rel.z() == 0.0) return {dz, kSingularDirection};
  return {dz, e_z};
}

PairDistance sphere_distance(const Eigen::Vector3d& p, const Sphere& s) {
  const Eigen::Vector3d rel = p - s.center;
  const double n = rel.norm();
  if (n == 0.0) return {-s.radius, kSingularDirection};
  return {n - s.radius, rel / n};
}

}  // namespace

std::string_view kind_name(const Shape& shape) {
  return std::visit(overloaded{[](const HalfSpace&) { return std::string_view("half_space"); },
                               [](const Box&) { return std::string_view("box"); },
                               [](const VerticalCylinder&) { return std::string_view("vertical_cylinder"); },
                               [](const Sphere&) { return std::string_view("sphere"); }},
                    shape);
}

void Obstacle::validate(const std::string& path) const {
  auto positive = [&](double v, const char* field) {
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCode::Validation, "must be strictly positive", path + "." + field);
  };
  std::visit(overloaded{[&](const HalfSpace& h) {
                          if (!h.normal.allFinite() || std::abs(h.normal.norm() - 1.0) > 1e-9) {
                            throw Error(ErrorCode::Validation, "normal must have unit norm", path + ".normal");
                          }
                        },
                        [&](const Box& b) {
                          positive(b.half_extents.x(), "half_extents[0]");
                          positive(b.half_extents.y(), "half_extents[1]");
                          positive(b.half_extents.z(), "half_extents[2]");
                        },
                        [&](const VerticalCylinder& c) {
                          positive(c.radius, "radius");
                          positive(c.half_height, "half_height");
                        },
                        [&](const Sphere& s) { positive(s.radius, "radius"); }},
             shape);
}

PairDistance signed_distance(const Eigen::Vector3d& point, const Shape& shape) {
  return std::visit(overloaded{[&](const HalfSpace& h) { return PairDistance{h.normal.dot(point) - h.offset, h.normal}; },
                               [&](const Box& b) { return box_distance(point, b); },
                               [&](const VerticalCylinder& c) { return cylinder_distance(point, c); },
                               [&](const Sphere& s) { return sphere_distance(point, s); }},
                    shape);
}

PairDistance pair_distance(const Eigen::Vector3d& sphere_world_center, double sphere_radius, const Obstacle& obstacle) {
  PairDistance d = signed_distance(sphere_world_center, obstacle.shape);
  d.distance -= sphere_radius;
  return d;
}

CollisionScene::CollisionScene(std::vector<CollisionSphere> spheres, std::vector<Obstacle> obstacles, double margin)
    : spheres_(std::move(spheres)), obstacles_(std::move(obstacles)), margin_(margin) {
  if (!(margin_ >= 0.0) || !std::isfinite(margin_)) throw Error(ErrorCode::Validation, "margin must be >= 0", "margin");
  if (spheres_.empty()) throw Error(ErrorCode::Validation, "scene needs at least one collision sphere", "spheres");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < spheres_.size(); ++i) {
    const auto& s = spheres_[i];
    const std::string path = "spheres[" + std::to_string(i) + "]";
    if (!ids.insert(s.id).second) throw Error(ErrorCode::Validation, "duplicate sphere id '" + s.id + "'", path + ".id");
    if (!(s.radius > 0.0) || !std::isfinite(s.radius)) throw Error(ErrorCode::Validation, "radius must be > 0", path + ".radius");
    if (s.link_index < 0 || s.link_index > kin::kFlangeFrame) {
      throw Error(ErrorCode::Validation, "link must be in [0, 7]", path + ".link");
    }
    if (!s.local_center.allFinite()) throw Error(ErrorCode::Validation, "center must be finite", path + ".center");
  }
  ids.clear();
  for (std::size_t i = 0; i < obstacles_.size(); ++i) {
    const std::string path = "obstacles[" + std::to_string(i) + "]";
    if (!ids.insert(obstacles_[i].id).second) {
      throw Error(ErrorCode::Validation, "duplicate obstacle id '" + obstacles_[i].id + "'", path + ".id");
    }
    obstacles_[i].validate(path);
  }
}

BarrierEvaluation evaluate_barrier(const kin::KinematicChain& chain, const kin::FrameList& frames,
                                   const CollisionScene& scene) {
  BarrierEvaluation out;
  out.per_pair.reserve(scene.spheres().size() * scene.obstacles().size());
  for (const CollisionSphere& sphere : scene.spheres()) {
    if (scene.obstacles().empty()) break;
    const Eigen::Vector3d center = frames[sphere.link_index].apply(sphere.local_center);
    const kin::PointJacobian jac = kin::point_jacobian(chain, frames, sphere.link_index, sphere.local_center);
    for (const Obstacle& obstacle : scene.obstacles()) {
      const PairDistance d = pair_distance(center, sphere.radius, obstacle);
      PairEvaluation pair;
      pair.sphere_id = sphere.id;
      pair.obstacle_id = obstacle.id;
      pair.value = d.distance - scene.margin();
      pair.gradient = jac.transpose() * d.direction;
      out.per_pair.push_back(std::move(pair));
    }
  }
  if (out.per_pair.empty()) return out;

  double min_value = out.per_pair.front().value;
  for (const auto& p : out.per_pair) min_value = std::min(min_value, p.value);
  // Deterministic tie-break: lexicographically smallest (sphere id, obstacle id)
  // among pairs within 1e-12 of the minimum.
  for (int i = 0; i < static_cast<int>(out.per_pair.size()); ++i) {
    const auto& p = out.per_pair[i];
    if (p.value > min_value + 1e-12) continue;
    if (out.active_pair < 0) {
      out.active_pair = i;
      continue;
    }
    const auto& best = out.per_pair[out.active_pair];
    if (std::tie(p.sphere_id, p.obstacle_id) < std::tie(best.sphere_id, best.obstacle_id)) out.active_pair = i;
  }
  out.value = out.per_pair[out.active_pair].value;
  out.gradient = out.per_pair[out.active_pair].gradient;
  return out;
}

BarrierEvaluation evaluate_barrier(const kin::KinematicChain& chain, const kin::JointConfig& q,
                                   const CollisionScene& scene) {
  return evaluate_barrier(chain, kin::forward_kinematics(chain, q), scene);
}

SmoothBarrier soft_min_barrier(const BarrierEvaluation& eval, double beta) {
  if (!(beta > 0.0)) throw Error(ErrorCode::InvalidArgument, "soft-min temperature must be > 0");
  if (!eval.has_pairs()) return {std::numeric_limits<double>::infinity(), Vector7::Zero()};
  const double h_min = eval.value;
  double sum = 0.0;
  Vector7 weighted = Vector7::Zero();
  for (const auto& p : eval.per_pair) {
    const double w = std::exp(-beta * (p.value - h_min));
    sum += w;
    weighted += w * p.gradient;
  }
  return {h_min - std::log(sum) / beta, weighted / sum};
}

std::vector<CollisionSphere> panda_default_spheres() {
  // Frame-local centres; frames follow the bundled modified-DH chain.
  return {
      {"link1", 0, {0.0, 0.0, -0.11}, 0.09},
      {"link2", 1, {0.0, -0.14, 0.0}, 0.09},
      {"link3", 2, {0.04, 0.0, -0.06}, 0.08},
      {"link4", 3, {-0.04, 0.06, 0.0}, 0.08},
      {"link5_a", 4, {0.0, 0.0, -0.24}, 0.07},
      {"link5_b", 4, {0.0, 0.0, -0.12}, 0.06},
      {"link6_a", 5, {0.0, 0.0, 0.0}, 0.07},
      {"link6_b", 5, {0.088, 0.0, 0.0}, 0.05},
      {"link7_a", 6, {0.0, 0.0, 0.06}, 0.05},
      {"link7_hand", 6, {0.0, 0.0, 0.16}, 0.06},
  };
}

}  // namespace cbfshield::collision
