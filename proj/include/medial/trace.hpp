#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <ostream>
#include <vector>

#include "medial/error.hpp"
#include "medial/field.hpp"
#include "medial/medial_field.hpp"
#include "medial/parallel.hpp"
#include "medial/vector.hpp"

namespace medial {

enum class Backend { Naive, Medial };
inline const char* backend_name(Backend b) { return b == Backend::Naive ? "naive" : "medial"; }

struct TraceConfig {
  double epsilon = 1e-4;
  double t_max = 4.0;
  int max_iters = 256;
  double radius_scale = 1.0;  // lambda: shrinks medial spheres for inexact fields

  /// epsilon = 1e-4 diag, t_max = 4 diag.
  static TraceConfig for_field(const DistanceField& field) {
    const double diag = field.diagonal();
    TraceConfig c;
    c.epsilon = 1e-4 * diag;
    c.t_max = 4.0 * diag;
    return c;
  }

  void validate() const {
    if (!(epsilon > 0.0)) throw Error(Errc::InvalidArgument, "epsilon must be > 0");
    if (!(t_max > 0.0)) throw Error(Errc::InvalidArgument, "t_max must be > 0");
    if (max_iters < 1) throw Error(Errc::InvalidArgument, "max_iters must be >= 1");
    if (!(radius_scale > 0.0 && radius_scale <= 1.0)) throw Error(Errc::InvalidArgument, "radius_scale must be in (0,1]");
  }
};

enum class TraceStatus { Hit, Miss, BudgetExhausted };

struct TraceResult {
  TraceStatus status = TraceStatus::Miss;
  Vec3 point = Vec3::Zero();
  double t = 0.0;
  int iterations = 0;
};

/// One loop iteration as seen by an observer. `disc` and `candidate` are NaN
/// when no medial sphere was available (naive backend or medial point).
struct StepRecord {
  Vec3 x;
  double abs_phi;
  double disc;
  double candidate;
  double step;
  bool medial_step;
};

struct NoObserver {
  void operator()(const StepRecord&) const {}
};

namespace detail {

inline TraceResult finish_trace(TraceStatus s, const Vec3& x, double t, int it) { return {s, x, t, it}; }

}  // namespace detail

/// Sphere tracing: x <- x + |phi(x)| d. One iteration is one field query.
template <class Observer = NoObserver>
TraceResult naive_trace(const DistanceField& field, const Ray& ray, const TraceConfig& cfg, Observer&& obs = {}) {
  double t = 0.0;
  Vec3 x = ray.origin;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    const double a = std::abs(field.phi(x));
    if (a < cfg.epsilon) return detail::finish_trace(TraceStatus::Hit, x, t, it);
    obs(StepRecord{x, a, std::nan(""), std::nan(""), a, false});
    t += a;
    if (t > cfg.t_max) return detail::finish_trace(TraceStatus::Miss, ray.origin + t * ray.direction, t, it);
    x = ray.origin + t * ray.direction;
  }
  return detail::finish_trace(TraceStatus::BudgetExhausted, x, t, cfg.max_iters);
}

/// Medial sphere tracing: step to the exit of the medial sphere that
/// contains x. The step is taken on the sphere shrunk by (almost) epsilon:
/// every point skipped then has |phi| >= epsilon, so the first point of the
/// epsilon band along the ray is never jumped over and grazing rays stop where
/// naive tracing stops. Falls back to the naive step when the exit is not
/// found or would be shorter than |phi|. `disc` and `candidate` in the
/// observer record are for the unshrunk sphere.
template <class Observer = NoObserver>
TraceResult medial_trace(const DistanceField& field, const MedialField& mf, const Ray& ray, const TraceConfig& cfg,
                         Observer&& obs = {}) {
  const double shrink = 0.999 * cfg.epsilon;
  double t = 0.0;
  Vec3 x = ray.origin;
  const Vec3& d = ray.direction;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    const FieldSample s = field.sample(x);
    const double a = std::abs(s.phi);
    if (a < cfg.epsilon) return detail::finish_trace(TraceStatus::Hit, x, t, it);
    StepRecord rec{x, a, std::nan(""), std::nan(""), a, false};
    if (s.grad) {
      const double m = mf.value(x);
      const Vec3 c = x + side_sign(s.phi) * *s.grad * (m - a);
      const double r = cfg.radius_scale * m;
      const Vec3 oc = c - x;
      const double beta = oc.dot(d);
      const double oc2 = oc.squaredNorm();
      rec.disc = beta * beta - (oc2 - r * r);
      if (rec.disc >= 0.0) rec.candidate = beta + std::sqrt(rec.disc);
      const double rs = r - shrink;
      const double disc = beta * beta - (oc2 - rs * rs);
      if (rs > 0.0 && disc >= 0.0) {
        const double step = beta + std::sqrt(disc);
        if (step > a) {
          rec.step = step;
          rec.medial_step = true;
        }
      }
    }
    obs(rec);
    t += rec.step;
    if (t > cfg.t_max) return detail::finish_trace(TraceStatus::Miss, ray.origin + t * d, t, it);
    x = ray.origin + t * d;
  }
  return detail::finish_trace(TraceStatus::BudgetExhausted, x, t, cfg.max_iters);
}

inline TraceResult trace_ray(const DistanceField& field, const MedialField* mf, const Ray& ray, const TraceConfig& cfg,
                             Backend backend) {
  if (backend == Backend::Medial) {
    if (!mf) throw Error(Errc::InvalidArgument, "medial backend needs a medial field");
    return medial_trace(field, *mf, ray, cfg);
  }
  return naive_trace(field, ray, cfg);
}

/// Pinhole camera. Pixel (0,0) is the top-left corner.
struct Camera {
  Vec3 eye = Vec3(0, 0, 5);
  Vec3 target = Vec3::Zero();
  Vec3 up = Vec3::UnitY();
  double vfov_deg = 40.0;
  int width = 128;
  int height = 128;

  void validate() const {
    if (width < 1 || height < 1) throw Error(Errc::InvalidArgument, "image size must be >= 1");
    if (!(vfov_deg > 0.0 && vfov_deg < 180.0)) throw Error(Errc::InvalidArgument, "vfov must be in (0,180)");
    if ((target - eye).norm() == 0.0) throw Error(Errc::InvalidArgument, "camera eye and target coincide");
  }

  Ray primary(int px, int py) const {
    const Vec3 fwd = (target - eye).normalized();
    Vec3 right = fwd.cross(up);
    if (right.norm() < 1e-9) right = fwd.cross(any_orthogonal(fwd));
    right.normalize();
    const Vec3 true_up = right.cross(fwd);
    const double half_h = std::tan(0.5 * vfov_deg * std::numbers::pi / 180.0);
    const double half_w = half_h * width / height;
    const double u = ((px + 0.5) / width * 2.0 - 1.0) * half_w;
    const double v = (1.0 - (py + 0.5) / height * 2.0) * half_h;
    return {eye, (fwd + u * right + v * true_up).normalized()};
  }
};

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

struct Image {
  int width = 0;
  int height = 0;
  std::vector<Rgb> pixels;

  Image() = default;
  Image(int w, int h, Rgb fill = {}) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}
  Rgb& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  const Rgb& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

/// Binary P6, 8 bits per channel.
inline void write_ppm(std::ostream& os, const Image& img) {
  os << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  for (const Rgb& p : img.pixels) {
    const char bytes[3] = {static_cast<char>(p.r), static_cast<char>(p.g), static_cast<char>(p.b)};
    os.write(bytes, 3);
  }
}

inline std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }
inline Rgb to_rgb(const Vec3& c) { return {to_byte(c.x()), to_byte(c.y()), to_byte(c.z())}; }

/// Per-frame means plus a pooled histogram of iteration counts.
struct IterationStats {
  std::vector<std::uint64_t> histogram;  // index = iteration count
  std::vector<double> frame_means;
  std::uint64_t rays = 0;

  void add_frame(const std::vector<TraceResult>& frame) {
    if (frame.empty()) return;
    double sum = 0.0;
    for (const auto& r : frame) {
      if (histogram.size() <= static_cast<std::size_t>(r.iterations)) histogram.resize(r.iterations + 1, 0);
      ++histogram[r.iterations];
      sum += r.iterations;
    }
    rays += frame.size();
    frame_means.push_back(sum / frame.size());
  }

  double mean() const {
    if (frame_means.empty()) return 0.0;
    double s = 0.0;
    for (double m : frame_means) s += m;
    return s / frame_means.size();
  }
  double min() const { return frame_means.empty() ? 0.0 : *std::min_element(frame_means.begin(), frame_means.end()); }
  double max() const { return frame_means.empty() ? 0.0 : *std::max_element(frame_means.begin(), frame_means.end()); }

  /// Fraction of pooled rays with strictly more than `threshold` iterations.
  double fraction_above(double threshold) const {
    if (rays == 0) return 0.0;
    std::uint64_t n = 0;
    for (std::size_t i = 0; i < histogram.size(); ++i)
      if (static_cast<double>(i) > threshold) n += histogram[i];
    return static_cast<double>(n) / rays;
  }
};

/// min(a MF(x + n eps_off)^p, 1), with MF sampled just outside the surface.
inline double mfao(const MedialField& mf, const DistanceField& field, const Vec3& x_surface, double a, double p,
                   double eps_off) {
  if (!(eps_off > 0.0)) throw Error(Errc::InvalidArgument, "eps_off must be > 0");
  const FieldSample s = field.sample(x_surface);
  if (!s.grad) throw Error(Errc::GradientUndefined, "surface normal undefined");
  const double v = std::max(mf.value(x_surface + *s.grad * eps_off), 0.0);
  return std::min(a * std::pow(v, p), 1.0);
}

struct AoParams {
  double a = 1.5;
  double p = 0.2;
};

enum class Shading { Normal, Lambert, LambertAo };

inline const Vec3 kLightDir = Vec3(-0.4, 0.8, 0.45).normalized();
inline const Rgb kBackground{24, 26, 38};

/// Colour of one hit. Depends only on the point, never on the camera.
inline Rgb shade_hit(const DistanceField& field, const MedialField* mf, const Vec3& hit, Shading shading,
                     const TraceConfig& cfg, const AoParams& ao = {}) {
  const FieldSample s = field.sample(hit);
  const Vec3 n = s.grad ? *s.grad : Vec3::UnitY();
  if (shading == Shading::Normal) return to_rgb(0.5 * (n + Vec3::Ones()));
  const double diffuse = std::max(0.0, n.dot(kLightDir));
  double occlusion = 1.0;
  if (shading == Shading::LambertAo) {
    if (!mf) throw Error(Errc::InvalidArgument, "ambient occlusion needs a medial field");
    if (s.grad) occlusion = mfao(*mf, field, hit, ao.a, ao.p, 2.0 * cfg.epsilon);
  }
  const double v = 0.8 * (0.3 * occlusion + 0.7 * diffuse);
  return to_rgb(Vec3::Constant(v));
}

/// Primary-ray hits for every pixel, row-major.
inline std::vector<TraceResult> trace_frame(const DistanceField& field, const MedialField* mf, const Camera& cam,
                                            const TraceConfig& cfg, Backend backend) {
  if (field.dim() != 3) throw Error(Errc::Dim2NotRenderable, "perspective rendering needs a 3D scene");
  cam.validate();
  cfg.validate();
  std::vector<TraceResult> out(static_cast<std::size_t>(cam.width) * cam.height);
  parallel_for(out.size(), [&](std::size_t i) {
    const int px = static_cast<int>(i % cam.width), py = static_cast<int>(i / cam.width);
    out[i] = trace_ray(field, mf, cam.primary(px, py), cfg, backend);
  });
  return out;
}

struct RenderResult {
  Image image;
  IterationStats stats;
  std::vector<TraceResult> rays;
};

inline RenderResult render(const DistanceField& field, const MedialField* mf, const Camera& cam, const TraceConfig& cfg,
                           Backend backend, Shading shading, const AoParams& ao = {}) {
  RenderResult r;
  r.rays = trace_frame(field, mf, cam, cfg, backend);
  r.stats.add_frame(r.rays);
  r.image = Image(cam.width, cam.height, kBackground);
  parallel_for(r.rays.size(), [&](std::size_t i) {
    if (r.rays[i].status == TraceStatus::Hit)
      r.image.pixels[i] = shade_hit(field, mf, r.rays[i].point, shading, cfg, ao);
  });
  return r;
}

/// Sign-split colour map: blue inside, orange outside, darker near zero,
/// with contour bands every `band` units.
struct Palette {
  double scale = 1.0;
  double band = 0.0;  // 0 disables contour lines
};

inline Rgb map_value(double v, const Palette& pal) {
  const double m = std::clamp(std::abs(v) / pal.scale, 0.0, 1.0);
  Vec3 c = v < 0.0 ? Vec3(0.15, 0.35, 0.85) : Vec3(0.95, 0.55, 0.15);
  c = c * (0.25 + 0.75 * m);
  if (pal.band > 0.0) {
    const double f = std::abs(v) / pal.band;
    if (f - std::floor(f) < 0.06) c *= 0.6;
  }
  return to_rgb(c);
}

/// Orthographic view of a scalar function over a 2D box. Pixel (i, j) samples
/// lo + (i/(w-1), (h-1-j)/(h-1)) * extent, so corner pixels sit on the box
/// corners and row 0 is the top edge.
inline Image visualize_field_2d(const std::function<double(const Vec3&)>& fn, const Aabb& bounds, int width, int height,
                                const Palette& pal) {
  for (int a = 0; a < 2; ++a)
    if (!(bounds.hi[a] > bounds.lo[a])) throw Error(Errc::BoundsDegenerate, "visualization bounds need positive extent");
  if (width < 2 || height < 2) throw Error(Errc::InvalidArgument, "visualization needs at least 2x2 pixels");
  Image img(width, height);
  parallel_for(img.pixels.size(), [&](std::size_t idx) {
    const int i = static_cast<int>(idx % width), j = static_cast<int>(idx / width);
    const Vec3 x(bounds.lo.x() + (bounds.hi.x() - bounds.lo.x()) * i / (width - 1),
                 bounds.lo.y() + (bounds.hi.y() - bounds.lo.y()) * (height - 1 - j) / (height - 1), 0.0);
    img.pixels[idx] = map_value(fn(x), pal);
  });
  return img;
}

/// Cameras on a sphere of radius 1.5 diag around the scene center, looking
/// at it. Eyes inside or within 1e-2 diag of the shape are redrawn.
inline std::vector<Camera> random_poses(const DistanceField& field, int n_poses, std::uint64_t seed, int width = 128,
                                        int height = 128, double vfov_deg = 40.0) {
  if (n_poses < 1) throw Error(Errc::InvalidArgument, "need at least one pose");
  Rng rng(seed);
  const Aabb b = field.bounds();
  const double diag = b.diagonal();
  std::vector<Camera> out;
  for (int tries = 0; static_cast<int>(out.size()) < n_poses; ++tries) {
    if (tries > 1000 * n_poses) throw Error(Errc::RejectionStarved, "no free camera positions around the scene");
    const Vec3 eye = b.center() + 1.5 * diag * uniform_direction(3, rng);
    if (field.phi(eye) <= 1e-2 * diag) continue;
    Camera c;
    c.eye = eye;
    c.target = b.center();
    c.width = width;
    c.height = height;
    c.vfov_deg = vfov_deg;
    out.push_back(c);
  }
  return out;
}

struct BenchResult {
  std::vector<Camera> poses;
  IterationStats naive;
  IterationStats medial;
};

/// Renders every pose with both backends and accumulates iteration stats.
inline BenchResult bench_poses(const DistanceField& field, const MedialField& mf, int n_poses, std::uint64_t seed,
                               const TraceConfig& cfg, int width = 128, int height = 128) {
  BenchResult r;
  r.poses = random_poses(field, n_poses, seed, width, height);
  for (const Camera& c : r.poses) {
    r.naive.add_frame(trace_frame(field, nullptr, c, cfg, Backend::Naive));
    r.medial.add_frame(trace_frame(field, &mf, c, cfg, Backend::Medial));
  }
  return r;
}

}  // namespace medial
