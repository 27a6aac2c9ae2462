#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>

#include "medial/error.hpp"
#include "medial/field.hpp"
#include "medial/grid.hpp"
#include "medial/vector.hpp"

namespace medial {

struct OracleConfig {
  double r_max = 0.0;  // exterior clamp, >= diag
  double tol = 0.0;    // bisection tolerance
  int max_doublings = 60;

  /// r_max = 4 diag, tol = 1e-6 diag.
  static OracleConfig for_field(const DistanceField& field) {
    const double diag = field.diagonal();
    return {4.0 * diag, 1e-6 * diag, 60};
  }

  void validate(double diag) const {
    if (!(r_max >= diag) || !std::isfinite(r_max)) throw Error(Errc::InvalidArgument, "r_max must be finite and >= diag");
    if (!(tol > 0.0)) throw Error(Errc::InvalidArgument, "oracle tolerance must be > 0");
    if (max_doublings < 1) throw Error(Errc::InvalidArgument, "max_doublings must be >= 1");
  }
};

/// One spoke: query point, its surface foot, and the medial sphere the spoke
/// ends in.
struct MedialSample {
  Vec3 query = Vec3::Zero();
  Vec3 foot = Vec3::Zero();
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
  bool clamped = false;
};

/// Points with phi <= 0 use the interior side.
inline Side side_of(double phi) { return phi > 0.0 ? Side::Exterior : Side::Interior; }
inline double side_sign(double phi) { return phi > 0.0 ? 1.0 : -1.0; }

/// x + grad|phi| (mf - |phi|). Not the closest-point projection: it walks
/// along the spoke away from the surface.
inline Vec3 medial_project(const DistanceField& field, double mf_value, const Vec3& x) {
  const FieldSample s = field.sample(x);
  if (!s.grad) throw Error(Errc::GradientUndefined, "medial projection needs a gradient");
  return x + side_sign(s.phi) * *s.grad * (mf_value - std::abs(s.phi));
}

namespace detail {

/// Largest t in [lo, hi) with f(t) = t - sign*phi(foot + t n) <= level, given
/// f(lo) <= level < f(hi). f is nondecreasing because phi is 1-Lipschitz.
template <class Ok>
double bisect_last_ok(double lo, double hi, double resolution, Ok&& ok) {
  for (int it = 0; it < 200 && hi - lo > resolution; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (ok(mid)) lo = mid;
    else hi = mid;
  }
  return lo;
}

}  // namespace detail

/// Ground-truth medial field by spoke marching. Along the spoke the distance
/// grows exactly like t until the medial sphere is reached, so the first
/// violation of |phi(foot + t n)| >= t - tol brackets the radius. Beyond the
/// medial point the violation grows linearly; bisecting two levels (tol and
/// 2 tol) and extrapolating to level 0 removes the O(tol) bias.
inline MedialSample mf_oracle(const DistanceField& field, const OracleConfig& cfg, const Vec3& x) {
  const FieldSample s = field.sample(x);
  MedialSample out;
  out.query = x;
  const double t0 = std::abs(s.phi);
  if (!s.grad) {
    // On the medial locus the query is its own medial center.
    out.foot = x;
    out.center = x;
    out.radius = t0;
    return out;
  }
  const double sg = side_sign(s.phi);
  const Vec3 n = sg * *s.grad;
  const Vec3 foot = x - *s.grad * s.phi;
  out.foot = foot;

  const double foot_tol = 1e3 * cfg.tol;
  if (std::abs(field.phi(foot)) > foot_tol)
    throw Error(Errc::SpokeMarchFailed, "surface projection misses the zero set; field is not an exact distance");

  const double r_max = std::max(cfg.r_max, t0);
  auto f = [&](double t) { return t - sg * field.phi(foot + t * n); };
  auto ok_at = [&](double level) { return [&, level](double t) { return f(t) <= level; }; };

  auto finish = [&](double t, bool clamped) {
    out.radius = t;
    out.center = foot + t * n;
    out.clamped = clamped;
    return out;
  };

  // Exponential bracketing.
  double lo = t0;
  double hi = r_max;
  bool bracketed = false;
  double t = std::max(t0, cfg.tol);
  for (int k = 0; k < cfg.max_doublings; ++k) {
    const double next = std::min(2.0 * t, r_max);
    if (f(next) <= cfg.tol) {
      lo = next;
      if (next >= r_max) return finish(r_max, true);
      t = next;
    } else {
      hi = next;
      bracketed = true;
      break;
    }
  }
  if (!bracketed) return finish(lo, lo >= r_max);

  const double resolution = 1e-6 * cfg.tol;
  const double t1 = detail::bisect_last_ok(lo, hi, resolution, ok_at(cfg.tol));
  if (f(hi) <= 2.0 * cfg.tol) return finish(t1, false);
  const double t2 = detail::bisect_last_ok(t1, hi, resolution, ok_at(2.0 * cfg.tol));
  const double t_star = std::clamp(2.0 * t1 - t2, t0, t1);
  return finish(t_star, false);
}

struct MfValue {
  double value = 0.0;
  bool clamped = false;
};

/// Local thickness MF(x), with the side picked by the sign of the distance.
class MedialField {
 public:
  virtual ~MedialField() = default;
  virtual MfValue mf(const Vec3& x) const = 0;
  double value(const Vec3& x) const { return mf(x).value; }
};

class OracleMedialField final : public MedialField {
 public:
  OracleMedialField(const DistanceField& field, OracleConfig cfg) : field_(&field), cfg_(cfg) {
    cfg_.validate(field.diagonal());
  }
  explicit OracleMedialField(const DistanceField& field) : OracleMedialField(field, OracleConfig::for_field(field)) {}

  MfValue mf(const Vec3& x) const override {
    const MedialSample s = mf_oracle(*field_, cfg_, x);
    return {s.radius, s.clamped};
  }
  MedialSample sample(const Vec3& x) const { return mf_oracle(*field_, cfg_, x); }
  const OracleConfig& config() const { return cfg_; }

 private:
  const DistanceField* field_;
  OracleConfig cfg_;
};

/// Wraps an arbitrary callable; used for corrupted fixtures and adapters.
class FunctionMedialField final : public MedialField {
 public:
  explicit FunctionMedialField(std::function<MfValue(const Vec3&)> fn) : fn_(std::move(fn)) {}
  MfValue mf(const Vec3& x) const override { return fn_(x); }

 private:
  std::function<MfValue(const Vec3&)> fn_;
};

/// Two baked lattices, one per side of the boundary.
class GridMedialField final : public MedialField {
 public:
  GridMedialField(const DistanceField& field, GridField interior, GridField exterior, double r_max)
      : field_(&field), interior_(std::move(interior)), exterior_(std::move(exterior)), r_max_(r_max) {}

  MfValue mf(const Vec3& x) const override {
    if (side_of(field_->phi(x)) == Side::Interior) return {interior_.interpolate(x), false};
    const double v = exterior_.interpolate(x);
    return {v, v >= r_max_ * (1.0 - 1e-12)};
  }
  const GridField& interior() const { return interior_; }
  const GridField& exterior() const { return exterior_; }

 private:
  const DistanceField* field_;
  GridField interior_;
  GridField exterior_;
  double r_max_;
};

/// max(|phi| - MF, 0).
inline double residual_maximality(const MedialField& mf, const DistanceField& field, const Vec3& x) {
  return std::max(std::abs(field.phi(x)) - mf.value(x), 0.0);
}

struct Residual {
  double value = 0.0;
  bool clamped = false;
};

/// | |phi(medial_project(x))| - MF(x) |, skipped where MF is clamped.
inline Residual residual_inscription(const MedialField& mf, const DistanceField& field, const Vec3& x) {
  const MfValue v = mf.mf(x);
  if (v.clamped) return {0.0, true};
  const Vec3 c = medial_project(field, v.value, x);
  return {std::abs(std::abs(field.phi(c)) - v.value), false};
}

/// |grad MF . grad phi| with central differences. Throws ExcludedRegion
/// within `delta` of the boundary or of the medial locus, and when the
/// stencil straddles the r_max clamp: min(t*, r_max) has a kink along the
/// spoke where t* = r_max, which the differences cannot resolve.
inline double residual_orthogonality(const MedialField& mf, const DistanceField& field, const Vec3& x, double fd_step,
                                     double delta) {
  const FieldSample s = field.sample(x);
  const MfValue v = mf.mf(x);
  if (!s.grad || std::abs(s.phi) < delta || v.value - std::abs(s.phi) < delta)
    throw Error(Errc::ExcludedRegion, "orthogonality is undefined near the boundary or the medial locus");
  Vec3 g = Vec3::Zero();
  for (int k = 0; k < field.dim(); ++k) {
    const Vec3 e = axis_vector(k) * fd_step;
    const MfValue up = mf.mf(x + e), dn = mf.mf(x - e);
    if (up.clamped != v.clamped || dn.clamped != v.clamped)
      throw Error(Errc::ExcludedRegion, "finite-difference stencil straddles the r_max clamp");
    g[k] = (up.value - dn.value) / (2.0 * fd_step);
  }
  return std::abs(g.dot(*s.grad));
}

inline double residual_orthogonality(const MedialField& mf, const DistanceField& field, const Vec3& x) {
  const double diag = field.diagonal();
  return residual_orthogonality(mf, field, x, 1e-4 * diag, 1e-2 * diag);
}

/// Largest deviation of MF from MF(x) at n evenly spaced points strictly
/// inside the spoke through x, keeping `margin` away from both ends.
inline double spoke_constancy_check(const MedialField& mf, const DistanceField& field, const Vec3& x, int n_samples,
                                    double margin) {
  const FieldSample s = field.sample(x);
  if (!s.grad) throw Error(Errc::GradientUndefined, "spoke direction undefined on the medial locus");
  const double v = mf.value(x);
  const double sg = side_sign(s.phi);
  const Vec3 n = sg * *s.grad;
  const Vec3 foot = x - *s.grad * s.phi;
  const double span = v - 2.0 * margin;
  if (span <= 0.0 || n_samples < 1) return 0.0;
  double worst = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const double t = margin + span * (i + 0.5) / n_samples;
    worst = std::max(worst, std::abs(mf.value(foot + t * n) - v));
  }
  return worst;
}

/// Oracle MF for one side on a lattice. Nodes on the other side of the
/// boundary store the value of the requested-side spoke through their foot
/// point, so interpolation near the boundary does not mix the two sides.
inline GridField bake_mf_grid(const DistanceField& field, const OracleConfig& cfg, const Aabb& bounds,
                              std::array<int, 3> res, Side side) {
  cfg.validate(field.diagonal());
  GridField g = make_lattice(bounds, res, field.dim());
  g.side = side;
  const double want = side == Side::Interior ? -1.0 : 1.0;
  const double nudge = std::max(1e-4 * field.diagonal(), 10.0 * cfg.tol);
  fill_lattice(g, [&](const Vec3& p) {
    FieldSample s = field.sample(p);
    if (side_sign(s.phi) == want) return mf_oracle(field, cfg, p).radius;
    Vec3 q = p;
    if (!s.grad) {
      // Wrong-side medial point: step off the locus to get a spoke.
      q = p + axis_vector(0) * nudge;
      s = field.sample(q);
      if (!s.grad) return std::abs(s.phi);
    }
    const Vec3 foot = q - *s.grad * s.phi;
    const Vec3 probe = foot + want * *s.grad * nudge;
    return mf_oracle(field, cfg, probe).radius;
  });
  return g;
}

}  // namespace medial
