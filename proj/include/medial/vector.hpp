#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace medial {

/// Points and directions. Two-dimensional scenes keep z == 0 everywhere, so
/// norms, dot products and boxes need no dimension argument.
using Vec3 = Eigen::Vector3d;

using Rng = std::mt19937_64;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline bool is_finite(const Vec3& v) {
  return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

inline Vec3 axis_vector(int axis) {
  Vec3 e = Vec3::Zero();
  e[axis] = 1.0;
  return e;
}

struct Aabb {
  Vec3 lo = Vec3::Constant(kInf);
  Vec3 hi = Vec3::Constant(-kInf);

  static Aabb from(const Vec3& lo, const Vec3& hi) { return Aabb{lo, hi}; }
  static Aabb unbounded(int dim) {
    Aabb b{Vec3::Constant(-kInf), Vec3::Constant(kInf)};
    if (dim == 2) b.lo.z() = b.hi.z() = 0.0;
    return b;
  }

  bool empty() const { return (hi.array() < lo.array()).any(); }
  bool bounded() const { return is_finite(lo) && is_finite(hi); }
  Vec3 center() const { return 0.5 * (lo + hi); }
  Vec3 extent() const { return hi - lo; }
  double diagonal() const { return (hi - lo).norm(); }

  bool contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }

  Aabb merged(const Aabb& o) const { return {lo.cwiseMin(o.lo), hi.cwiseMax(o.hi)}; }
  Aabb intersected(const Aabb& o) const { return {lo.cwiseMax(o.lo), hi.cwiseMin(o.hi)}; }

  /// Scales the box about its center; a degenerate z extent stays degenerate.
  Aabb scaled(double factor) const {
    const Vec3 c = center();
    const Vec3 h = 0.5 * factor * extent();
    return {c - h, c + h};
  }

  Aabb padded(double margin, int dim) const {
    Vec3 m = Vec3::Constant(margin);
    if (dim == 2) m.z() = 0.0;
    return {lo - m, hi + m};
  }
};

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitX();
};

inline Vec3 uniform_in_box(const Aabb& box, int dim, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec3 p = Vec3::Zero();
  for (int k = 0; k < dim; ++k) p[k] = box.lo[k] + u(rng) * (box.hi[k] - box.lo[k]);
  return p;
}

inline Vec3 uniform_direction(int dim, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (;;) {
    Vec3 v = Vec3::Zero();
    for (int k = 0; k < dim; ++k) v[k] = n(rng);
    const double len = v.norm();
    if (len > 1e-12) return v / len;
  }
}

/// Any unit vector orthogonal to `n` (3D), used to build tangent frames.
inline Vec3 any_orthogonal(const Vec3& n) {
  const Vec3 helper = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return n.cross(helper).normalized();
}

}  // namespace medial
