#pragma once

#include <optional>
#include <utility>

#include "medial/error.hpp"
#include "medial/vector.hpp"

namespace medial {

/// Raw gradients shorter than this mark a point on the medial locus.
inline constexpr double kGradientUndefinedBelow = 1e-6;

enum class Side { Interior, Exterior };

inline const char* side_name(Side s) { return s == Side::Interior ? "interior" : "exterior"; }

/// Signed distance plus its unit gradient; `grad` is empty on the medial locus.
struct FieldSample {
  double phi = 0.0;
  std::optional<Vec3> grad;
};

/// A scalar field whose zero set is the shape boundary: negative inside,
/// positive outside. Implementations must be safe for concurrent reads.
class DistanceField {
 public:
  virtual ~DistanceField() = default;

  virtual int dim() const = 0;
  virtual Aabb bounds() const = 0;
  virtual double phi(const Vec3& x) const = 0;

  /// Unnormalized gradient. The default is central differences with fd_step().
  virtual Vec3 raw_gradient(const Vec3& x) const {
    const double h = fd_step();
    Vec3 g = Vec3::Zero();
    for (int k = 0; k < dim(); ++k) {
      Vec3 e = Vec3::Zero();
      e[k] = h;
      g[k] = (phi(x + e) - phi(x - e)) / (2.0 * h);
    }
    return g;
  }

  virtual double fd_step() const { return 1e-4 * bounds().diagonal(); }

  virtual FieldSample sample(const Vec3& x) const {
    FieldSample s;
    s.phi = phi(x);
    const Vec3 g = raw_gradient(x);
    const double len = g.norm();
    if (len >= kGradientUndefinedBelow) s.grad = g / len;
    return s;
  }

  double diagonal() const { return bounds().diagonal(); }
};

inline double eval_phi(const DistanceField& field, const Vec3& x) { return field.phi(x); }

inline Vec3 eval_grad(const DistanceField& field, const Vec3& x) {
  const FieldSample s = field.sample(x);
  if (!s.grad) throw Error(Errc::GradientUndefined, "gradient vanishes at query point");
  return *s.grad;
}

/// Closest-point projection onto the zero set: x - grad * phi.
inline Vec3 project_surface(const DistanceField& field, const Vec3& x) {
  const FieldSample s = field.sample(x);
  if (!s.grad) throw Error(Errc::GradientUndefined, "cannot project a medial point");
  return x - *s.grad * s.phi;
}

/// Central-difference gradient with an explicit step, independent of any
/// analytic gradient the field provides.
inline Vec3 numerical_gradient(const DistanceField& field, const Vec3& x, double h) {
  Vec3 g = Vec3::Zero();
  for (int k = 0; k < field.dim(); ++k) {
    Vec3 e = Vec3::Zero();
    e[k] = h;
    g[k] = (field.phi(x + e) - field.phi(x - e)) / (2.0 * h);
  }
  return g;
}

inline std::pair<Aabb, double> scene_bounds(const DistanceField& field) {
  const Aabb b = field.bounds();
  return {b, b.diagonal()};
}

}  // namespace medial
