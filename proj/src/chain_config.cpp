#include "cbfshield/error.hpp"
#include "cbfshield/kinematics.hpp"
#include "json_fields.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

extern const char kBundledPandaJson[];

namespace cbfshield::kin {

using detail::json;

namespace {

RigidTransform parse_transform(const json& obj, const std::string& path) {
  const Eigen::Vector3d rpy = detail::vector<3>(obj, path, "rotation_rpy");
  const Eigen::Vector3d t = detail::vector<3>(obj, path, "translation");
  return RigidTransform::from_rpy(rpy, t);
}

Vector7 parse_vector7(const json& obj, const std::string& path, const char* key) {
  const json& v = detail::array(obj, path, key);
  if (v.size() != kNumJoints) {
    throw Error(ErrorCode::Validation, "wrong joint count: expected 7 entries, got " + std::to_string(v.size()),
                detail::join(path, key));
  }
  return detail::as_vector<kNumJoints>(v, detail::join(path, key));
}

}  // namespace

ChainDocument parse_chain_document(std::string_view json_text) {
  const json doc = detail::parse_json(json_text, "chain config");
  if (!doc.is_object()) throw Error(ErrorCode::Parse, "chain config must be a JSON object");

  const json& joints_json = detail::array(doc, "", "joints");
  if (joints_json.size() != kNumJoints) {
    throw Error(ErrorCode::Validation,
                "wrong joint count: expected 7 revolute joints, got " + std::to_string(joints_json.size()), "joints");
  }
  std::array<Joint, kNumJoints> joints;
  for (int i = 0; i < kNumJoints; ++i) {
    const std::string path = detail::index("joints", i);
    const json& j = joints_json[i];
    if (j.contains("type") && j["type"] != "revolute") {
      throw Error(ErrorCode::Validation, "only revolute joints are supported", path + ".type");
    }
    joints[i].name = j.contains("name") ? detail::string(j, path, "name") : "joint" + std::to_string(i + 1);
    joints[i].axis = detail::vector<3>(j, path, "axis");
    const double n = joints[i].axis.norm();
    if (!(n > 0.0)) throw Error(ErrorCode::Validation, "axis must be nonzero", path + ".axis");
    joints[i].axis /= n;
    joints[i].fixed_transform = parse_transform(detail::require(j, path, "fixed_transform"), path + ".fixed_transform");
  }

  JointLimits limits;
  const json& lim = detail::require(doc, "", "limits");
  limits.lower = parse_vector7(lim, "limits", "lower");
  limits.upper = parse_vector7(lim, "limits", "upper");
  limits.validate();

  const RigidTransform base = doc.contains("base_frame") ? parse_transform(doc["base_frame"], "base_frame")
                                                         : RigidTransform::identity();
  const RigidTransform flange = doc.contains("flange_offset") ? parse_transform(doc["flange_offset"], "flange_offset")
                                                              : RigidTransform::identity();
  const std::string name = doc.contains("name") ? detail::string(doc, "", "name") : "chain";

  KinematicChain chain(name, joints, base, flange, limits);

  const json& ref = detail::require(doc, "", "reference");
  const JointConfig ref_q(parse_vector7(ref, "reference", "q"));
  const RigidTransform ref_pose = parse_transform(detail::require(ref, "reference", "flange_pose"),
                                                  "reference.flange_pose");

  const RigidTransform fk = forward_kinematics(chain, ref_q)[kFlangeFrame];
  const double pos_err = (fk.translation - ref_pose.translation).norm();
  const Eigen::AngleAxisd rot_err(ref_pose.rotation.transpose() * fk.rotation);
  if (pos_err > 1e-6 || std::abs(rot_err.angle()) > 1e-6) {
    std::ostringstream msg;
    msg << "forward kinematics at reference.q disagrees with the declared flange pose (position error "
        << pos_err << " m, rotation error " << std::abs(rot_err.angle()) << " rad)";
    throw Error(ErrorCode::Validation, msg.str(), "reference.flange_pose");
  }
  return {std::move(chain), ref_q, ref_pose};
}

KinematicChain load_chain(std::string_view json_text) { return parse_chain_document(json_text).chain; }

KinematicChain load_chain_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open chain config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return load_chain(buf.str());
}

const std::string& bundled_panda_config() {
  static const std::string text(kBundledPandaJson);
  return text;
}

const KinematicChain& panda_chain() {
  static const KinematicChain chain = load_chain(bundled_panda_config());
  return chain;
}

JointConfig panda_home() {
  Vector7 q;
  q << 0.0, -std::numbers::pi / 4, 0.0, -3 * std::numbers::pi / 4, 0.0, std::numbers::pi / 2, std::numbers::pi / 4;
  return JointConfig(q);
}

}  // namespace cbfshield::kin
