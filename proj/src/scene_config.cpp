#include "cbfshield/collision.hpp"
#include "cbfshield/error.hpp"
#include "json_fields.hpp"

#include <fstream>
#include <sstream>

namespace cbfshield::collision {

using detail::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Obstacle parse_obstacle(const json& o, const std::string& path) {
  Obstacle out;
  out.id = detail::string(o, path, "id");
  const std::string kind = detail::string(o, path, "kind");
  if (kind == "half_space") {
    out.shape = HalfSpace{detail::vector<3>(o, path, "normal"), detail::number(o, path, "offset")};
  } else if (kind == "box") {
    out.shape = Box{detail::vector<3>(o, path, "center"), detail::vector<3>(o, path, "half_extents")};
  } else if (kind == "vertical_cylinder") {
    out.shape = VerticalCylinder{detail::vector<3>(o, path, "axis_point"), detail::number(o, path, "radius"),
                                 detail::number(o, path, "half_height")};
  } else if (kind == "sphere") {
    out.shape = Sphere{detail::vector<3>(o, path, "center"), detail::number(o, path, "radius")};
  } else {
    throw Error(ErrorCode::Parse, "unknown obstacle kind '" + kind + "'", path + ".kind");
  }
  out.validate(path);
  return out;
}

json obstacle_json(const Obstacle& o) {
  json j;
  j["id"] = o.id;
  j["kind"] = std::string(kind_name(o.shape));
  std::visit(overloaded{[&](const HalfSpace& h) {
                          j["normal"] = detail::to_array(h.normal);
                          j["offset"] = h.offset;
                        },
                        [&](const Box& b) {
                          j["center"] = detail::to_array(b.center);
                          j["half_extents"] = detail::to_array(b.half_extents);
                        },
                        [&](const VerticalCylinder& c) {
                          j["axis_point"] = detail::to_array(c.axis_point);
                          j["radius"] = c.radius;
                          j["half_height"] = c.half_height;
                        },
                        [&](const Sphere& s) {
                          j["center"] = detail::to_array(s.center);
                          j["radius"] = s.radius;
                        }},
             o.shape);
  return j;
}

}  // namespace

CollisionScene load_scene(std::string_view json_text) {
  const json doc = detail::parse_json(json_text, "scene config");
  if (!doc.is_object()) throw Error(ErrorCode::Parse, "scene config must be a JSON object");

  std::vector<CollisionSphere> spheres;
  const json& sj = detail::array(doc, "", "spheres");
  for (std::size_t i = 0; i < sj.size(); ++i) {
    const std::string path = detail::index("spheres", i);
    CollisionSphere s;
    s.id = detail::string(sj[i], path, "id");
    s.link_index = static_cast<int>(detail::integer(sj[i], path, "link"));
    s.local_center = detail::vector<3>(sj[i], path, "center");
    s.radius = detail::number(sj[i], path, "radius");
    spheres.push_back(std::move(s));
  }

  std::vector<Obstacle> obstacles;
  const json& oj = detail::array(doc, "", "obstacles");
  for (std::size_t i = 0; i < oj.size(); ++i) obstacles.push_back(parse_obstacle(oj[i], detail::index("obstacles", i)));

  return CollisionScene(std::move(spheres), std::move(obstacles), detail::number(doc, "", "margin"));
}

CollisionScene load_scene_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open scene config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return load_scene(buf.str());
}

std::string scene_to_json(const CollisionScene& scene) {
  json doc;
  doc["schema_version"] = 1;
  doc["margin"] = scene.margin();
  doc["spheres"] = json::array();
  for (const auto& s : scene.spheres()) {
    doc["spheres"].push_back(
        {{"id", s.id}, {"link", s.link_index}, {"center", detail::to_array(s.local_center)}, {"radius", s.radius}});
  }
  doc["obstacles"] = json::array();
  for (const auto& o : scene.obstacles()) doc["obstacles"].push_back(obstacle_json(o));
  return doc.dump(2) + "\n";
}

}  // namespace cbfshield::collision
