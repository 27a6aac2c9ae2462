#pragma once

#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "medial/error.hpp"
#include "medial/grid.hpp"
#include "medial/shapes.hpp"

namespace medial {

/// A scene file: dimension, CSG shape tree, domain bounds and optional
/// per-scene defaults for CLI flags.
struct Scene {
  std::string name;
  int dim = 2;
  ShapeSpec shape;
  Aabb bounds;
  nlohmann::json defaults = nlohmann::json::object();

  AnalyticField field() const { return AnalyticField(shape, dim, bounds); }
};

namespace detail {

using nlohmann::json;

inline Vec3 parse_vec(const json& j, int dim, const char* what) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(dim))
    throw Error(Errc::InvalidScene, std::string(what) + " must be an array of " + std::to_string(dim) + " numbers");
  Vec3 v = Vec3::Zero();
  for (int k = 0; k < dim; ++k) {
    if (!j[k].is_number()) throw Error(Errc::InvalidScene, std::string(what) + " entries must be numbers");
    v[k] = j[k].get<double>();
  }
  if (!is_finite(v)) throw Error(Errc::InvalidScene, std::string(what) + " must be finite");
  return v;
}

inline double parse_num(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number())
    throw Error(Errc::InvalidScene, std::string("missing numeric field '") + key + "'");
  return j[key].get<double>();
}

inline ShapeSpec parse_shape(const json& j, int dim, int depth) {
  if (depth > kMaxShapeDepth) throw Error(Errc::InvalidScene, "shape tree deeper than 32 levels");
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    throw Error(Errc::InvalidScene, "shape node needs a string 'type'");
  const std::string type = j["type"].get<std::string>();
  if (type == "sphere") return make_sphere(parse_vec(j.at("center"), dim, "center"), parse_num(j, "radius"));
  if (type == "box") return make_box(parse_vec(j.at("center"), dim, "center"), parse_vec(j.at("half_extents"), dim, "half_extents"));
  if (type == "capsule")
    return make_capsule(parse_vec(j.at("a"), dim, "a"), parse_vec(j.at("b"), dim, "b"), parse_num(j, "radius"));
  if (type == "torus")
    return make_torus(parse_vec(j.at("center"), dim, "center"), parse_num(j, "major_radius"), parse_num(j, "minor_radius"));
  if (type == "halfspace") {
    const Vec3 n = parse_vec(j.at("normal"), dim, "normal");
    if (n.norm() == 0) throw Error(Errc::InvalidScene, "halfspace normal must be non-zero");
    return make_halfspace(parse_vec(j.at("point"), dim, "point"), n);
  }
  if (type == "slab") {
    if (!j.contains("axis") || !j["axis"].is_number_integer()) throw Error(Errc::InvalidScene, "slab needs integer 'axis'");
    return make_slab(j["axis"].get<int>(), parse_num(j, "half_width"), j.value("offset", 0.0));
  }
  CsgOp op;
  if (type == "union") op = CsgOp::Union;
  else if (type == "intersection") op = CsgOp::Intersection;
  else if (type == "difference") op = CsgOp::Difference;
  else throw Error(Errc::InvalidScene, "unknown shape type '" + type + "'");
  if (!j.contains("children") || !j["children"].is_array() || j["children"].empty())
    throw Error(Errc::InvalidScene, type + " needs a non-empty 'children' array");
  std::vector<ShapeSpec> children;
  for (const auto& c : j["children"]) children.push_back(parse_shape(c, dim, depth + 1));
  return make_csg(op, std::move(children));
}

inline json shape_json(const ShapeSpec& s, int dim) {
  return std::visit(
      Overloaded{
          [&](const Sphere& q) { return json{{"type", "sphere"}, {"center", vec_json(q.center, dim)}, {"radius", q.radius}}; },
          [&](const Box& q) {
            return json{{"type", "box"}, {"center", vec_json(q.center, dim)}, {"half_extents", vec_json(q.half_extents, dim)}};
          },
          [&](const Capsule& q) {
            return json{{"type", "capsule"}, {"a", vec_json(q.a, dim)}, {"b", vec_json(q.b, dim)}, {"radius", q.radius}};
          },
          [&](const Torus& q) {
            return json{{"type", "torus"},
                        {"center", vec_json(q.center, dim)},
                        {"major_radius", q.major_radius},
                        {"minor_radius", q.minor_radius}};
          },
          [&](const Halfspace& q) {
            return json{{"type", "halfspace"}, {"point", vec_json(q.point, dim)}, {"normal", vec_json(q.normal, dim)}};
          },
          [&](const Slab& q) {
            return json{{"type", "slab"}, {"axis", q.axis}, {"half_width", q.half_width}, {"offset", q.offset}};
          },
          [&](const Csg& c) {
            json children = json::array();
            for (const auto& ch : c.children) children.push_back(shape_json(ch, dim));
            const char* name = c.op == CsgOp::Union ? "union" : c.op == CsgOp::Intersection ? "intersection" : "difference";
            return json{{"type", name}, {"children", children}};
          },
      },
      s.node);
}

}  // namespace detail

inline Scene parse_scene(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Errc::InvalidScene, "scene must be a JSON object");
  Scene s;
  if (!j.contains("dim") || !j["dim"].is_number_integer()) throw Error(Errc::InvalidScene, "scene needs integer 'dim'");
  s.dim = j["dim"].get<int>();
  if (s.dim != 2 && s.dim != 3) throw Error(Errc::InvalidScene, "dim must be 2 or 3");
  s.name = j.value("name", std::string("scene"));
  if (!j.contains("shape")) throw Error(Errc::InvalidScene, "scene needs a 'shape'");
  s.shape = detail::parse_shape(j["shape"], s.dim, 1);
  validate_shape(s.shape, s.dim);
  if (j.contains("bounds")) {
    const auto& b = j["bounds"];
    if (!b.is_object()) throw Error(Errc::InvalidScene, "bounds must be an object with min/max");
    s.bounds = Aabb{detail::parse_vec(b.at("min"), s.dim, "bounds.min"), detail::parse_vec(b.at("max"), s.dim, "bounds.max")};
  } else {
    s.bounds = shape_bounds(s.shape, s.dim);
    if (!s.bounds.bounded())
      throw Error(Errc::BoundsDegenerate, "unbounded shape needs explicit scene bounds");
  }
  for (int k = 0; k < s.dim; ++k)
    if (!(s.bounds.hi[k] > s.bounds.lo[k])) throw Error(Errc::BoundsDegenerate, "scene bounds have zero extent");
  if (j.contains("defaults")) {
    if (!j["defaults"].is_object()) throw Error(Errc::InvalidScene, "defaults must be an object");
    s.defaults = j["defaults"];
  }
  return s;
}

inline nlohmann::json scene_to_json(const Scene& s) {
  nlohmann::json j{{"name", s.name},
                   {"dim", s.dim},
                   {"shape", detail::shape_json(s.shape, s.dim)},
                   {"bounds", {{"min", detail::vec_json(s.bounds.lo, s.dim)}, {"max", detail::vec_json(s.bounds.hi, s.dim)}}}};
  if (!s.defaults.empty()) j["defaults"] = s.defaults;
  return j;
}

inline Scene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::InvalidScene, "cannot open scene file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidScene, std::string("malformed scene JSON: ") + e.what());
  }
  try {
    return parse_scene(j);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidScene, std::string("malformed scene: ") + e.what());
  }
}

inline std::vector<std::string> bundled_scene_names(int dim) {
  if (dim == 2) return {"disk", "slab", "box", "two_disks"};
  return {"sphere", "box3", "capsule", "torus", "sphere_plane"};
}

/// Analytic stand-ins for mesh assets. Every composite scene is a disjoint
/// union, where min() is an exact signed distance.
inline Scene bundled_scene(std::string_view name) {
  auto make = [&](int dim, ShapeSpec shape, std::optional<Aabb> bounds = std::nullopt) {
    Scene s;
    s.name = std::string(name);
    s.dim = dim;
    s.shape = std::move(shape);
    s.bounds = bounds ? *bounds : shape_bounds(s.shape, dim);
    return s;
  };
  if (name == "disk") return make(2, make_sphere(Vec3::Zero(), 1.0));
  if (name == "slab") return make(2, make_slab(1, 1.0), Aabb{Vec3(-6, -2, 0), Vec3(6, 2, 0)});
  if (name == "box") return make(2, make_box(Vec3::Zero(), Vec3(1, 1, 0)));
  if (name == "two_disks")
    return make(2, make_csg(CsgOp::Union, {make_sphere(Vec3(-1.5, 0, 0), 1.0), make_sphere(Vec3(1.5, 0, 0), 0.75)}));
  if (name == "sphere") return make(3, make_sphere(Vec3::Zero(), 1.0));
  if (name == "box3") return make(3, make_box(Vec3::Zero(), Vec3(1.0, 0.6, 0.8)));
  if (name == "capsule") return make(3, make_capsule(Vec3(-0.8, 0, 0), Vec3(0.8, 0, 0), 0.5));
  if (name == "torus") return make(3, make_torus(Vec3::Zero(), 1.0, 0.35));
  if (name == "sphere_plane")
    return make(3,
                make_csg(CsgOp::Union, {make_sphere(Vec3::Zero(), 1.0), make_halfspace(Vec3(0, -1.05, 0), Vec3::UnitY())}),
                Aabb{Vec3(-3, -1.05, -3), Vec3(3, 1, 3)});
  throw Error(Errc::InvalidScene, "unknown bundled scene '" + std::string(name) + "'");
}

}  // namespace medial
