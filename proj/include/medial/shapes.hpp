#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "medial/error.hpp"
#include "medial/field.hpp"
#include "medial/vector.hpp"

namespace medial {

// Leaf primitives. Every leaf evaluates to an exact signed distance.
struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
};
struct Box {
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Ones();
};
struct Capsule {
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::UnitX();
  double radius = 0.5;
};
/// Ring around the y axis (3D only).
struct Torus {
  Vec3 center = Vec3::Zero();
  double major_radius = 1.0;
  double minor_radius = 0.25;
};
/// Solid side is where (x - point) . normal <= 0.
struct Halfspace {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitY();
};
/// |x[axis] - offset| <= half_width.
struct Slab {
  int axis = 1;
  double half_width = 1.0;
  double offset = 0.0;
};

enum class CsgOp { Union, Intersection, Difference };

struct ShapeSpec;

/// Difference subtracts children[1..] from children[0].
struct Csg {
  CsgOp op = CsgOp::Union;
  std::vector<ShapeSpec> children;
};

struct ShapeSpec {
  std::variant<Sphere, Box, Capsule, Torus, Halfspace, Slab, Csg> node;
};

inline constexpr int kMaxShapeDepth = 32;

inline ShapeSpec make_sphere(const Vec3& c, double r) { return {Sphere{c, r}}; }
inline ShapeSpec make_box(const Vec3& c, const Vec3& h) { return {Box{c, h}}; }
inline ShapeSpec make_capsule(const Vec3& a, const Vec3& b, double r) { return {Capsule{a, b, r}}; }
inline ShapeSpec make_torus(const Vec3& c, double major, double minor) {
  return {Torus{c, major, minor}};
}
inline ShapeSpec make_halfspace(const Vec3& p, const Vec3& n) { return {Halfspace{p, n.normalized()}}; }
inline ShapeSpec make_slab(int axis, double half_width, double offset = 0.0) {
  return {Slab{axis, half_width, offset}};
}
inline ShapeSpec make_csg(CsgOp op, std::vector<ShapeSpec> children) {
  return {Csg{op, std::move(children)}};
}

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

namespace detail {

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(Errc::InvalidScene, msg);
}

inline void validate(const ShapeSpec& s, int dim, int depth) {
  require(depth <= kMaxShapeDepth, "shape tree deeper than 32 levels");
  std::visit(
      Overloaded{
          [&](const Sphere& p) { require(p.radius > 0 && is_finite(p.center), "sphere radius must be > 0"); },
          [&](const Box& p) {
            for (int k = 0; k < dim; ++k) require(p.half_extents[k] > 0, "box half extents must be > 0");
            require(is_finite(p.center), "box center must be finite");
          },
          [&](const Capsule& p) {
            require(p.radius > 0 && is_finite(p.a) && is_finite(p.b), "capsule radius must be > 0");
          },
          [&](const Torus& p) {
            require(dim == 3, "torus is only defined in 3D");
            require(p.major_radius > 0 && p.minor_radius > 0, "torus radii must be > 0");
          },
          [&](const Halfspace& p) { require(p.normal.norm() > 0.5, "halfspace normal must be unit length"); },
          [&](const Slab& p) {
            require(p.axis >= 0 && p.axis < dim, "slab axis out of range");
            require(p.half_width > 0, "slab half width must be > 0");
          },
          [&](const Csg& c) {
            require(!c.children.empty(), "CSG node needs children");
            for (const auto& ch : c.children) validate(ch, dim, depth + 1);
          },
      },
      s.node);
}

inline double sign_nonzero(double v) { return v < 0.0 ? -1.0 : 1.0; }

}  // namespace detail

/// Throws Errc::InvalidScene when radii/extents are not positive, the tree is
/// too deep, or a primitive does not exist in `dim`.
inline void validate_shape(const ShapeSpec& s, int dim) {
  detail::require(dim == 2 || dim == 3, "dimension must be 2 or 3");
  detail::validate(s, dim, 1);
}

/// Signed distance and its raw (possibly zero) gradient.
struct DistanceGrad {
  double phi = 0.0;
  Vec3 grad = Vec3::Zero();
};

inline double shape_phi(const ShapeSpec& s, const Vec3& p, int dim) {
  return std::visit(
      Overloaded{
          [&](const Sphere& q) { return (p - q.center).norm() - q.radius; },
          [&](const Box& q) {
            double outside2 = 0.0;
            double inside = -kInf;
            for (int k = 0; k < dim; ++k) {
              const double d = std::abs(p[k] - q.center[k]) - q.half_extents[k];
              if (d > 0) outside2 += d * d;
              inside = std::max(inside, d);
            }
            return std::sqrt(outside2) + std::min(inside, 0.0);
          },
          [&](const Capsule& q) {
            const Vec3 pa = p - q.a;
            const Vec3 ba = q.b - q.a;
            const double len2 = ba.squaredNorm();
            const double h = len2 > 0 ? std::clamp(pa.dot(ba) / len2, 0.0, 1.0) : 0.0;
            return (pa - ba * h).norm() - q.radius;
          },
          [&](const Torus& q) {
            const Vec3 r = p - q.center;
            const double ring = std::hypot(r.x(), r.z()) - q.major_radius;
            return std::hypot(ring, r.y()) - q.minor_radius;
          },
          [&](const Halfspace& q) { return (p - q.point).dot(q.normal); },
          [&](const Slab& q) { return std::abs(p[q.axis] - q.offset) - q.half_width; },
          [&](const Csg& c) {
            double v = shape_phi(c.children.front(), p, dim);
            for (std::size_t i = 1; i < c.children.size(); ++i) {
              const double w = shape_phi(c.children[i], p, dim);
              switch (c.op) {
                case CsgOp::Union: v = std::min(v, w); break;
                case CsgOp::Intersection: v = std::max(v, w); break;
                case CsgOp::Difference: v = std::max(v, -w); break;
              }
            }
            return v;
          },
      },
      s.node);
}

/// Analytic gradient per primitive; CSG nodes take the gradient of the child
/// selected by min/max (the first child on ties).
inline DistanceGrad shape_eval(const ShapeSpec& s, const Vec3& p, int dim) {
  return std::visit(
      Overloaded{
          [&](const Sphere& q) {
            const Vec3 v = p - q.center;
            const double len = v.norm();
            return DistanceGrad{len - q.radius, len > 0 ? Vec3(v / len) : Vec3::Zero()};
          },
          [&](const Box& q) {
            Vec3 outside = Vec3::Zero();
            Vec3 sgn = Vec3::Zero();
            double inside = -kInf;
            int arg = 0;
            for (int k = 0; k < dim; ++k) {
              sgn[k] = detail::sign_nonzero(p[k] - q.center[k]);
              const double d = std::abs(p[k] - q.center[k]) - q.half_extents[k];
              outside[k] = std::max(d, 0.0);
              if (d > inside) {
                inside = d;
                arg = k;
              }
            }
            const double out_len = outside.norm();
            if (out_len > 0) return DistanceGrad{out_len, Vec3(sgn.cwiseProduct(outside) / out_len)};
            Vec3 g = Vec3::Zero();
            g[arg] = sgn[arg];
            return DistanceGrad{inside, g};
          },
          [&](const Capsule& q) {
            const Vec3 pa = p - q.a;
            const Vec3 ba = q.b - q.a;
            const double len2 = ba.squaredNorm();
            const double h = len2 > 0 ? std::clamp(pa.dot(ba) / len2, 0.0, 1.0) : 0.0;
            const Vec3 v = pa - ba * h;
            const double len = v.norm();
            return DistanceGrad{len - q.radius, len > 0 ? Vec3(v / len) : Vec3::Zero()};
          },
          [&](const Torus& q) {
            const Vec3 r = p - q.center;
            const double planar = std::hypot(r.x(), r.z());
            const double ring = planar - q.major_radius;
            const double len = std::hypot(ring, r.y());
            Vec3 g = Vec3::Zero();
            if (len > 0) {
              if (planar > 0) {
                g.x() = ring / len * r.x() / planar;
                g.z() = ring / len * r.z() / planar;
              }
              g.y() = r.y() / len;
            }
            return DistanceGrad{len - q.minor_radius, g};
          },
          [&](const Halfspace& q) { return DistanceGrad{(p - q.point).dot(q.normal), q.normal}; },
          [&](const Slab& q) {
            const double u = p[q.axis] - q.offset;
            Vec3 g = Vec3::Zero();
            if (u != 0.0) g[q.axis] = u > 0 ? 1.0 : -1.0;
            return DistanceGrad{std::abs(u) - q.half_width, g};
          },
          [&](const Csg& c) {
            DistanceGrad best = shape_eval(c.children.front(), p, dim);
            for (std::size_t i = 1; i < c.children.size(); ++i) {
              DistanceGrad o = shape_eval(c.children[i], p, dim);
              switch (c.op) {
                case CsgOp::Union:
                  if (o.phi < best.phi) best = o;
                  break;
                case CsgOp::Intersection:
                  if (o.phi > best.phi) best = o;
                  break;
                case CsgOp::Difference:
                  if (-o.phi > best.phi) best = DistanceGrad{-o.phi, -o.grad};
                  break;
              }
            }
            return best;
          },
      },
      s.node);
}

/// Point membership by direct geometric tests, independent of shape_phi.
inline bool shape_contains(const ShapeSpec& s, const Vec3& p, int dim) {
  return std::visit(
      Overloaded{
          [&](const Sphere& q) { return (p - q.center).squaredNorm() < q.radius * q.radius; },
          [&](const Box& q) {
            for (int k = 0; k < dim; ++k)
              if (!(std::abs(p[k] - q.center[k]) < q.half_extents[k])) return false;
            return true;
          },
          [&](const Capsule& q) {
            // Closest point on the segment by sampling-free clamped projection.
            const Vec3 ba = q.b - q.a;
            const double t = ba.squaredNorm() > 0 ? std::clamp((p - q.a).dot(ba) / ba.squaredNorm(), 0.0, 1.0) : 0.0;
            return (p - (q.a + t * ba)).squaredNorm() < q.radius * q.radius;
          },
          [&](const Torus& q) {
            const Vec3 r = p - q.center;
            const double ring = std::sqrt(r.x() * r.x() + r.z() * r.z()) - q.major_radius;
            return ring * ring + r.y() * r.y() < q.minor_radius * q.minor_radius;
          },
          [&](const Halfspace& q) { return (p - q.point).dot(q.normal) < 0.0; },
          [&](const Slab& q) { return std::abs(p[q.axis] - q.offset) < q.half_width; },
          [&](const Csg& c) {
            bool in = shape_contains(c.children.front(), p, dim);
            for (std::size_t i = 1; i < c.children.size(); ++i) {
              const bool o = shape_contains(c.children[i], p, dim);
              switch (c.op) {
                case CsgOp::Union: in = in || o; break;
                case CsgOp::Intersection: in = in && o; break;
                case CsgOp::Difference: in = in && !o; break;
              }
            }
            return in;
          },
      },
      s.node);
}

/// Conservative box around the boundary; unbounded primitives yield infinite extents.
inline Aabb shape_bounds(const ShapeSpec& s, int dim) {
  auto flat = [dim](Aabb b) {
    if (dim == 2) b.lo.z() = b.hi.z() = 0.0;
    return b;
  };
  return std::visit(
      Overloaded{
          [&](const Sphere& q) {
            return flat({q.center - Vec3::Constant(q.radius), q.center + Vec3::Constant(q.radius)});
          },
          [&](const Box& q) { return flat({q.center - q.half_extents, q.center + q.half_extents}); },
          [&](const Capsule& q) {
            const Vec3 r = Vec3::Constant(q.radius);
            return flat({q.a.cwiseMin(q.b) - r, q.a.cwiseMax(q.b) + r});
          },
          [&](const Torus& q) {
            const double outer = q.major_radius + q.minor_radius;
            const Vec3 h(outer, q.minor_radius, outer);
            return flat({q.center - h, q.center + h});
          },
          [&](const Halfspace&) { return Aabb::unbounded(dim); },
          [&](const Slab& q) {
            Aabb b = Aabb::unbounded(dim);
            b.lo[q.axis] = q.offset - q.half_width;
            b.hi[q.axis] = q.offset + q.half_width;
            return b;
          },
          [&](const Csg& c) {
            Aabb b = shape_bounds(c.children.front(), dim);
            if (c.op == CsgOp::Difference) return b;
            for (std::size_t i = 1; i < c.children.size(); ++i) {
              const Aabb o = shape_bounds(c.children[i], dim);
              b = c.op == CsgOp::Union ? b.merged(o) : b.intersected(o);
            }
            return b;
          },
      },
      s.node);
}

/// Exact-primitive CSG scene as a DistanceField.
class AnalyticField final : public DistanceField {
 public:
  AnalyticField(ShapeSpec spec, int dim, Aabb bounds) : spec_(std::move(spec)), dim_(dim), bounds_(bounds) {
    validate_shape(spec_, dim_);
    if (dim_ == 2) bounds_.lo.z() = bounds_.hi.z() = 0.0;
    if (!bounds_.bounded() || bounds_.empty())
      throw Error(Errc::BoundsDegenerate, "scene bounds must be finite and non-empty");
    for (int k = 0; k < dim_; ++k)
      if (!(bounds_.hi[k] > bounds_.lo[k])) throw Error(Errc::BoundsDegenerate, "scene bounds have zero extent");
  }

  /// Bounds default to the analytic box of the boundary.
  AnalyticField(ShapeSpec spec, int dim) : AnalyticField(spec, dim, shape_bounds(spec, dim)) {}

  int dim() const override { return dim_; }
  Aabb bounds() const override { return bounds_; }
  double phi(const Vec3& x) const override { return shape_phi(spec_, x, dim_); }
  Vec3 raw_gradient(const Vec3& x) const override { return shape_eval(spec_, x, dim_).grad; }

  FieldSample sample(const Vec3& x) const override {
    const DistanceGrad dg = shape_eval(spec_, x, dim_);
    FieldSample s{dg.phi, std::nullopt};
    const double len = dg.grad.norm();
    if (len >= kGradientUndefinedBelow) s.grad = dg.grad / len;
    return s;
  }

  bool contains(const Vec3& x) const { return shape_contains(spec_, x, dim_); }
  const ShapeSpec& spec() const { return spec_; }

 private:
  ShapeSpec spec_;
  int dim_;
  Aabb bounds_;
};

struct SurfacePoint {
  Vec3 point;
  Vec3 normal;
};

/// Uniform samples over the boundary of an AnalyticField restricted to its
/// bounds. Each leaf surface is drawn in proportion to its (proposal) area,
/// and draws that are not on the composite boundary are rejected, which keeps
/// the accepted samples uniform.
class SurfaceSampler {
 public:
  explicit SurfaceSampler(const AnalyticField& field) : field_(&field) {
    collect(field.spec());
    double total = 0.0;
    for (const auto& p : patches_) {
      total += p.area;
      cumulative_.push_back(total);
    }
    if (total <= 0.0) throw Error(Errc::InvalidScene, "scene has no sampleable surface");
  }

  SurfacePoint sample(Rng& rng) const {
    std::uniform_real_distribution<double> u(0.0, cumulative_.back());
    const double diag = field_->diagonal();
    const Aabb box = field_->bounds().padded(1e-9 * diag, field_->dim());
    for (int trial = 0; trial < kMaxTrials; ++trial) {
      const double pick = u(rng);
      const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), pick);
      const auto& patch = patches_[std::min<std::size_t>(it - cumulative_.begin(), patches_.size() - 1)];
      Vec3 y = patch.draw(rng);
      if (field_->dim() == 2) y.z() = 0.0;
      if (!box.contains(y)) continue;
      const FieldSample s = field_->sample(y);
      if (std::abs(s.phi) > 1e-9 * diag || !s.grad) continue;
      return {y, *s.grad};
    }
    throw Error(Errc::RejectionStarved, "surface rejection sampling starved");
  }

 private:
  static constexpr int kMaxTrials = 1000000;

  struct Patch {
    double area;
    std::function<Vec3(Rng&)> draw;
  };

  void add_plane(const Vec3& point, const Vec3& normal) {
    const int dim = field_->dim();
    const Aabb b = field_->bounds();
    const double half = b.diagonal();
    const Vec3 anchor = b.center() - normal * (b.center() - point).dot(normal);
    Vec3 t1, t2 = Vec3::Zero();
    if (dim == 2) {
      t1 = Vec3(-normal.y(), normal.x(), 0.0);
    } else {
      t1 = any_orthogonal(normal);
      t2 = normal.cross(t1).normalized();
    }
    const double area = dim == 2 ? 2 * half : 4 * half * half;
    patches_.push_back({area, [=](Rng& rng) {
                          std::uniform_real_distribution<double> u(-half, half);
                          Vec3 y = anchor + u(rng) * t1;
                          if (dim == 3) y += u(rng) * t2;
                          return y;
                        }});
  }

  void collect(const ShapeSpec& s) {
    const int dim = field_->dim();
    using std::numbers::pi;
    std::visit(
        Overloaded{
            [&](const Sphere& q) {
              const double area = dim == 2 ? 2 * pi * q.radius : 4 * pi * q.radius * q.radius;
              patches_.push_back({area, [q, dim](Rng& rng) { return Vec3(q.center + q.radius * uniform_direction(dim, rng)); }});
            },
            [&](const Box& q) {
              for (int k = 0; k < dim; ++k) {
                for (double sgn : {-1.0, 1.0}) {
                  double area = 1.0;
                  for (int j = 0; j < dim; ++j)
                    if (j != k) area *= 2 * q.half_extents[j];
                  patches_.push_back({area, [q, k, sgn, dim](Rng& rng) {
                                        std::uniform_real_distribution<double> u(-1.0, 1.0);
                                        Vec3 y = q.center;
                                        for (int j = 0; j < dim; ++j)
                                          y[j] += j == k ? sgn * q.half_extents[j] : u(rng) * q.half_extents[j];
                                        return y;
                                      }});
                }
              }
            },
            [&](const Capsule& q) {
              const Vec3 axis = q.b - q.a;
              const double len = axis.norm();
              const double cap_area = dim == 2 ? 2 * pi * q.radius : 4 * pi * q.radius * q.radius;
              patches_.push_back({cap_area, [q, dim](Rng& rng) {
                                    const Vec3 dir = uniform_direction(dim, rng);
                                    const Vec3& end = dir.dot(q.b - q.a) >= 0 ? q.b : q.a;
                                    return Vec3(end + q.radius * dir);
                                  }});
              if (len > 0) {
                const Vec3 u = axis / len;
                if (dim == 2) {
                  const Vec3 perp(-u.y(), u.x(), 0.0);
                  patches_.push_back({2 * len, [q, perp](Rng& rng) {
                                        std::uniform_real_distribution<double> t(0.0, 1.0);
                                        const double side = t(rng) < 0.5 ? -1.0 : 1.0;
                                        return Vec3(q.a + t(rng) * (q.b - q.a) + side * q.radius * perp);
                                      }});
                } else {
                  const Vec3 e1 = any_orthogonal(u);
                  const Vec3 e2 = u.cross(e1);
                  patches_.push_back({2 * pi * q.radius * len, [q, e1, e2](Rng& rng) {
                                        std::uniform_real_distribution<double> t(0.0, 1.0);
                                        const double th = 2 * pi * t(rng);
                                        return Vec3(q.a + t(rng) * (q.b - q.a) +
                                                    q.radius * (std::cos(th) * e1 + std::sin(th) * e2));
                                      }});
                }
              }
            },
            [&](const Torus& q) {
              patches_.push_back({4 * pi * pi * q.major_radius * q.minor_radius, [q](Rng& rng) {
                                    std::uniform_real_distribution<double> t(0.0, 1.0);
                                    const double u = 2 * pi * t(rng);
                                    double v = 0.0;
                                    // Area element is proportional to R + r cos v.
                                    for (;;) {
                                      v = 2 * pi * t(rng);
                                      const double accept = (q.major_radius + q.minor_radius * std::cos(v)) /
                                                            (q.major_radius + q.minor_radius);
                                      if (t(rng) <= accept) break;
                                    }
                                    const double ring = q.major_radius + q.minor_radius * std::cos(v);
                                    return Vec3(q.center +
                                                Vec3(ring * std::cos(u), q.minor_radius * std::sin(v), ring * std::sin(u)));
                                  }});
            },
            [&](const Halfspace& q) { add_plane(q.point, q.normal); },
            [&](const Slab& q) {
              const Vec3 e = axis_vector(q.axis);
              add_plane(e * (q.offset + q.half_width), e);
              add_plane(e * (q.offset - q.half_width), -e);
            },
            [&](const Csg& c) {
              for (const auto& ch : c.children) collect(ch);
            },
        },
        s.node);
  }

  const AnalyticField* field_;
  std::vector<Patch> patches_;
  std::vector<double> cumulative_;
};

/// `count` uniform interior points by rejection inside the field bounds.
/// Throws RejectionStarved once 10^6 trials have run with under 0.1% accepted.
inline std::vector<Vec3> sample_interior(const DistanceField& field, std::size_t count, Rng& rng) {
  constexpr std::size_t kProbeTrials = 1000000;
  const Aabb b = field.bounds();
  std::vector<Vec3> out;
  out.reserve(count);
  std::size_t trials = 0;
  while (out.size() < count) {
    const Vec3 p = uniform_in_box(b, field.dim(), rng);
    ++trials;
    if (field.phi(p) < 0.0) out.push_back(p);
    if (trials >= kProbeTrials && out.size() * 1000 < trials)
      throw Error(Errc::RejectionStarved, "interior acceptance below 0.1%");
  }
  return out;
}

}  // namespace medial
