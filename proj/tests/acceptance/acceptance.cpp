// Acceptance checks. Prints one PASS/FAIL line per criterion; exit status is
// non-zero if any selected criterion fails.
//
//   acceptance            run all ten
//   acceptance --only 4   run one

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "medial/medial_field.hpp"
#include "medial/nn/train.hpp"
#include "medial/proxy.hpp"
#include "medial/scene.hpp"
#include "medial/trace.hpp"
#include "support/closed_form.hpp"
#include "support/tiny_net.hpp"

using namespace medial;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const std::vector<std::string> kScenes2d{"disk", "slab", "box", "two_disks"};

std::function<double(const Vec3&, double)> closed_form(const std::string& name) {
  if (name == "disk") return ref::disk_thickness;
  if (name == "slab") return ref::slab_thickness;
  if (name == "box") return ref::square_thickness;
  return ref::two_disks_thickness;
}

// ---------------------------------------------------------------------------

Outcome oracle_correctness() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string worst_scene;
  for (const auto& name : kScenes2d) {
    const AnalyticField f = bundled_scene(name).field();
    const OracleConfig cfg = OracleConfig::for_field(f);
    const OracleMedialField mf(f, cfg);
    const auto ref = closed_form(name);
    const double diag = f.diagonal();
    const Aabb box = f.bounds().padded(0.1 * diag, 2);
    Rng rng(101);
    std::vector<Vec3> pts(10000);
    for (auto& p : pts) p = uniform_in_box(box, 2, rng);
    std::vector<double> err(pts.size());
    parallel_for(pts.size(), [&](std::size_t i) {
      err[i] = std::abs(mf.value(pts[i]) - ref(pts[i], cfg.r_max)) / diag;
    });
    const double e = *std::max_element(err.begin(), err.end());
    if (e >= worst) {
      worst = e;
      worst_scene = name;
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 30.0,
          fmt("max |MF - closed form| = %.2e diag (%s), 4x10^4 points in %.1f s", worst, worst_scene.c_str(), secs)};
}

// ---------------------------------------------------------------------------

Outcome constraint_audit() {
  std::vector<std::string> scenes = kScenes2d;
  for (const auto& n : bundled_scene_names(3)) scenes.push_back(n);
  double max_maximal = 0.0, max_ins = 0.0, max_orth = 0.0, max_spoke = 0.0;
  std::size_t n_ins = 0, n_orth = 0, n_spoke = 0, excluded = 0, clamped = 0;
  for (const auto& name : scenes) {
    const AnalyticField f = bundled_scene(name).field();
    const OracleMedialField mf(f);
    const double diag = f.diagonal();
    Rng rng(202);
    std::vector<Vec3> pts(1500);
    for (auto& p : pts) p = uniform_in_box(f.bounds(), f.dim(), rng);
    struct R {
      double maximal = 0, ins = -1, orth = -1, spoke = -1;
      bool clamped = false;
    };
    std::vector<R> rs(pts.size());
    parallel_for(pts.size(), [&](std::size_t i) {
      R& r = rs[i];
      r.maximal = residual_maximality(mf, f, pts[i]);
      const Residual ins = residual_inscription(mf, f, pts[i]);
      r.clamped = ins.clamped;
      if (!ins.clamped) r.ins = ins.value / diag;
      try {
        r.orth = residual_orthogonality(mf, f, pts[i]);
      } catch (const Error&) {
      }
      if (!ins.clamped) {
        try {
          r.spoke = spoke_constancy_check(mf, f, pts[i], 8, 1e-3 * diag) / diag;
        } catch (const Error&) {
        }
      }
    });
    for (const R& r : rs) {
      max_maximal = std::max(max_maximal, r.maximal);
      if (r.clamped) ++clamped;
      if (r.ins >= 0) ++n_ins, max_ins = std::max(max_ins, r.ins);
      if (r.orth >= 0) ++n_orth, max_orth = std::max(max_orth, r.orth);
      else ++excluded;
      if (r.spoke >= 0) ++n_spoke, max_spoke = std::max(max_spoke, r.spoke);
    }
  }

  // Corrupted fixture: the box oracle with a smooth 20% bump.
  const AnalyticField box = bundled_scene("box").field();
  const OracleMedialField bo(box);
  const FunctionMedialField bumped([&](const Vec3& x) {
    MfValue v = bo.mf(x);
    v.value *= 1.0 + 0.2 * std::sin(3.0 * x.x()) * std::cos(2.0 * x.y());
    return v;
  });
  Rng rng(12);
  double corrupt = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 x = uniform_in_box(box.bounds(), 2, rng);
    corrupt = std::max(corrupt, residual_maximality(bumped, box, x));
    corrupt = std::max(corrupt, residual_inscription(bumped, box, x).value);
  }
  corrupt /= box.diagonal();

  const bool pass = max_maximal == 0.0 && max_ins < 1e-4 && max_orth < 1e-3 && max_spoke < 1e-4 && corrupt > 1e-2 &&
                    n_ins > 0 && n_orth > 0 && n_spoke > 0;
  return {pass, fmt("9 scenes: maximality max %.1e; inscription max %.1e diag (%zu pts, %zu clamped); orthogonality "
                    "max %.1e (%zu pts, %zu excluded); spoke max %.1e diag (%zu pts); corrupted fixture %.2e diag",
                    max_maximal, max_ins, n_ins, clamped, max_orth, n_orth, excluded, max_spoke, n_spoke, corrupt)};
}

// ---------------------------------------------------------------------------

Outcome step_dominance() {
  std::size_t accepted = 0, candidate_short = 0, oversteps = 0, samples = 0;
  const std::size_t target = 100000;
  for (int round = 0; accepted < target; ++round) {
    for (const auto& name : bundled_scene_names(3)) {
      const AnalyticField f = bundled_scene(name).field();
      const OracleMedialField mf(f);
      TraceConfig cfg = TraceConfig::for_field(f);
      cfg.radius_scale = 1.0;
      for (const Camera& cam : random_poses(f, 2, 300 + round, 48, 48)) {
        for (int py = 0; py < cam.height; ++py)
          for (int px = 0; px < cam.width; ++px) {
            const Ray ray = cam.primary(px, py);
            medial_trace(f, mf, ray, cfg, [&](const StepRecord& s) {
              if (!s.medial_step) return;
              ++accepted;
              // The unshrunk sphere's exit, and the step actually taken.
              if (!(s.candidate >= s.abs_phi * (1.0 - 1e-12)) || !(s.step >= s.abs_phi)) ++candidate_short;
              for (int k = 1; k <= 64; ++k, ++samples)
                if (f.phi(s.x + (s.step * k / 64.0) * ray.direction) <= 0.0) ++oversteps;
            });
          }
      }
    }
  }
  return {accepted >= target && candidate_short == 0 && oversteps == 0,
          fmt("%zu accepted medial steps, %zu with s < |phi|, %zu oversteps in %zu along-step samples", accepted,
              candidate_short, oversteps, samples)};
}

// ---------------------------------------------------------------------------

Outcome convergence_speedup() {
  const auto t0 = Clock::now();
  bool pass = true;
  std::string d;
  for (const auto& name : bundled_scene_names(3)) {
    const AnalyticField f = bundled_scene(name).field();
    const OracleMedialField mf(f);
    const BenchResult r = bench_poses(f, mf, 16, 0, TraceConfig::for_field(f), 128, 128);
    const double nm = r.naive.mean(), mm = r.medial.mean();
    const double fn = r.naive.fraction_above(2.0 * nm), fm = r.medial.fraction_above(2.0 * nm);
    const bool ok = mm <= 0.8 * nm && fm < fn;
    pass = pass && ok;
    d += fmt("%s naive %.2f/%.2f/%.2f medial %.2f/%.2f/%.2f ratio %.2f tail %.4f vs %.4f; ", name.c_str(), nm,
             r.naive.min(), r.naive.max(), mm, r.medial.min(), r.medial.max(), mm / nm, fn, fm);
  }
  const double secs = seconds_since(t0);
  return {pass && secs < 300.0, d + fmt("(mean/min/max per frame) %.1f s", secs)};
}

// ---------------------------------------------------------------------------

Outcome render_equivalence() {
  std::size_t mutual = 0, agree = 0, only_one = 0;
  for (const auto& name : bundled_scene_names(3)) {
    const AnalyticField f = bundled_scene(name).field();
    const OracleMedialField mf(f);
    const TraceConfig cfg = TraceConfig::for_field(f);
    const double tol = 1e-3 * f.diagonal();
    for (const Camera& cam : random_poses(f, 16, 0, 128, 128)) {
      const auto a = trace_frame(f, nullptr, cam, cfg, Backend::Naive);
      const auto b = trace_frame(f, &mf, cam, cfg, Backend::Medial);
      for (std::size_t i = 0; i < a.size(); ++i) {
        const bool ha = a[i].status == TraceStatus::Hit, hb = b[i].status == TraceStatus::Hit;
        if (ha != hb) ++only_one;
        if (!(ha && hb)) continue;
        ++mutual;
        if ((a[i].point - b[i].point).norm() <= tol) ++agree;
      }
    }
  }
  const double frac = mutual ? static_cast<double>(agree) / mutual : 0.0;
  return {mutual > 0 && frac >= 0.999, fmt("%zu of %zu mutually-hit pixels within 1e-3 diag (%.5f); %zu pixels hit by "
                                           "one backend only",
                                           agree, mutual, frac, only_one)};
}

// ---------------------------------------------------------------------------

Outcome proxy_pareto() {
  bool pass = true;
  std::string d;
  for (const std::string name : {"box", "two_disks"}) {
    const AnalyticField f = bundled_scene(name).field();
    const OracleMedialField mf(f);
    const auto rows = pareto_report(f, mf, {24, 48, 96, 192, 384}, ParetoConfig::for_field(f));
    std::map<std::size_t, std::map<ProxyKind, double>> by;
    for (const auto& r : rows) by[r.budget][r.kind] = r.mae_percent;
    int matched = 0, violations = 0;
    for (const auto& [b, k] : by) {
      if (!k.count(ProxyKind::Medial) || !k.count(ProxyKind::Tangent) || !k.count(ProxyKind::Uniform)) continue;
      ++matched;
      const double m = k.at(ProxyKind::Medial);
      if (m > k.at(ProxyKind::Tangent) || m > k.at(ProxyKind::Uniform)) ++violations;
      d += fmt("%s@%zu %.3f/%.3f/%.3f; ", name.c_str(), b, m, k.at(ProxyKind::Tangent), k.at(ProxyKind::Uniform));
    }
    pass = pass && matched >= 4 && violations == 0;
  }
  const AnalyticField disk = bundled_scene("disk").field();
  const auto rows = pareto_report(disk, OracleMedialField(disk), {3}, ParetoConfig::for_field(disk));
  double disk_mae = 1e300;
  for (const auto& r : rows)
    if (r.kind == ProxyKind::Medial) disk_mae = r.mae_percent;
  pass = pass && disk_mae < 1e-6;
  return {pass, d + fmt("(medial/tangent/uniform MAE %%); disk at 3 floats: %.2e %%", disk_mae)};
}

// ---------------------------------------------------------------------------

Outcome fss_properties() {
  int monotone_fail = 0, scale_fail = 0, determinism_fail = 0, sets = 0;
  auto check = [&](const std::vector<ProxySphere>& cands, std::size_t m) {
    ++sets;
    const FssResult r = furthest_sphere_sampling(cands, m, 0.0);
    for (std::size_t i = 2; i < r.separations.size(); ++i)
      if (r.separations[i] > r.separations[i - 1]) {
        ++monotone_fail;
        break;
      }
    for (double s : {1e-3, 0.37, 12.5, 4096.0}) {
      std::vector<ProxySphere> scaled = cands;
      for (auto& c : scaled) c = {c.center * s, c.radius * s};
      if (furthest_sphere_sampling(scaled, m, 0.0).order != r.order) ++scale_fail;
    }
  };
  // Random sphere sets with radii spread over two decades.
  Rng rng(77);
  std::uniform_real_distribution<double> u(-5.0, 5.0), lr(-2.0, 0.0);
  for (int t = 0; t < 40; ++t) {
    std::vector<ProxySphere> c(200);
    for (auto& s : c) s = {Vec3(u(rng), u(rng), t % 2 ? u(rng) : 0.0), std::pow(10.0, lr(rng))};
    check(c, 60);
  }
  // Medial candidates of the 2D scenes.
  for (const auto& name : kScenes2d) {
    const AnalyticField f = bundled_scene(name).field();
    const OracleMedialField mf(f);
    const auto a = sample_medial_candidates(f, mf, 2048, 5);
    const auto b = sample_medial_candidates(f, mf, 2048, 5);
    bool same = a.size() == b.size();
    for (std::size_t i = 0; same && i < a.size(); ++i) same = a[i].center == b[i].center && a[i].radius == b[i].radius;
    const std::size_t m = std::min<std::size_t>(a.size(), 40);
    if (!same || furthest_sphere_sampling(a, m, 0.0).order != furthest_sphere_sampling(b, m, 0.0).order)
      ++determinism_fail;
    const FssConfig fc{2048, m, 0.05 * f.diagonal(), 5};
    const ProxySet p1 = medial_proxy(a, 2, fc), p2 = medial_proxy(a, 2, fc);
    if (proxy_to_json(p1) != proxy_to_json(p2)) ++determinism_fail;
    check(a, m);
  }
  return {monotone_fail == 0 && scale_fail == 0 && determinism_fail == 0,
          fmt("%d sphere sets: %d non-monotone separation sequences, %d scale-dependent orders (4 scales), %d "
              "non-deterministic runs",
              sets, monotone_fail, scale_fail, determinism_fail)};
}

// ---------------------------------------------------------------------------

// The medial objective is the weighted sum of the three medial terms as the
// training loss sees it, on a fixed held-out batch drawn like training
// batches. Per-term values are reported alongside.
struct MedialObjective {
  nn::MedialResiduals r;
  double weighted = 0.0;
};

MedialObjective medial_objective(const nn::MlpParams& p, const AnalyticField& gt, const Eigen::MatrixXd& pts) {
  const nn::LossWeights w;
  MedialObjective o;
  o.r = nn::medial_residuals(p, gt, pts);
  o.weighted = w.maximal * o.r.maximal + w.inscribed * o.r.inscribed + w.orthogonal * o.r.orthogonal;
  return o;
}

Outcome neural_training() {
  using namespace nn;
  bool ok = true;
  std::string detail;
  for (const std::string name : {"disk", "box"}) {
    const AnalyticField gt = bundled_scene(name).field();
    Rng rng(77);
    const SampleBatch held = sample_batch(SurfaceSampler(gt), 2, gt.diagonal(), 4096, TrainConfig{}.sigma_volume, rng);
    double mae[2] = {0.0, 0.0};
    for (const bool ablate : {false, true}) {
      TrainConfig cfg;
      cfg.steps = 20000;
      cfg.ablate_medial = ablate;
      cfg.net.dim = 2;
      const auto t0 = Clock::now();
      const MlpParams p = train(gt, cfg);
      const double secs = seconds_since(t0);
      mae[ablate] = network_surface_mae(p, gt, 4096, 1234);
      ok = ok && mae[ablate] < 0.5 && secs < 20.0 * 60.0;
      detail += fmt("%s%s: MAE %.4f%% in %.0f s; ", name.c_str(), ablate ? " ablated" : "", mae[ablate], secs);
      if (ablate) continue;
      const MlpParams init = init_network(cfg.net, cfg.seed, gt.bounds());
      const MedialObjective a = medial_objective(init, gt, held.volume_points);
      const MedialObjective b = medial_objective(p, gt, held.volume_points);
      const double drop = a.weighted / std::max(b.weighted, 1e-300);
      ok = ok && drop >= 10.0;
      detail += fmt("medial objective %.3g -> %.3g (%.0fx; max %.2e->%.2e ins %.2e->%.2e orth %.2e->%.2e); ",
                    a.weighted, b.weighted, drop, a.r.maximal, b.r.maximal, a.r.inscribed, b.r.inscribed,
                    a.r.orthogonal, b.r.orthogonal);
    }
    const double ratio = std::max(mae[0], mae[1]) / std::min(mae[0], mae[1]);
    ok = ok && ratio <= 2.0;
    detail += fmt("%s full/ablated MAE ratio %.2f; ", name.c_str(), ratio);
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

// ---------------------------------------------------------------------------

Outcome gradient_correctness() {
  using namespace nn;
  const AnalyticField disk = bundled_scene("disk").field();
  const MlpParams p0 = fixtures::perturbed(init_network(fixtures::tiny_config(), 9, disk.bounds()), 2, 0.05);
  Rng rng(3);
  const SurfaceSampler sampler(disk);
  const SampleBatch batch = sample_batch(sampler, 2, disk.diagonal(), 6, 0.3, rng);
  for (int i = 0; i < batch.volume_points.rows(); ++i)
    if (std::abs(forward(p0, Vec3(batch.volume_points(i, 0), batch.volume_points(i, 1), 0)).phi) < 1e-4)
      return {false, "fixture has a volume point on the MF head switch"};

  const double h = 1e-5;
  double worst = 0.0;
  std::string worst_name;
  auto param_check = [&](const TrainConfig& c, const std::string& name, double progress) {
    Eigen::VectorXd g;
    compute_losses(p0, disk, batch, c, progress, &g);
    Eigen::VectorXd fd(g.size());
    MlpParams p = p0;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      const double keep = p.theta[i];
      p.theta[i] = keep + h;
      const double up = compute_losses(p, disk, batch, c, progress, nullptr).total;
      p.theta[i] = keep - h;
      const double dn = compute_losses(p, disk, batch, c, progress, nullptr).total;
      p.theta[i] = keep;
      fd[i] = (up - dn) / (2 * h);
    }
    const double rel = fd.norm() > 0 ? (g - fd).norm() / fd.norm() : 1.0;
    if (rel >= worst) worst = rel, worst_name = name;
  };

  TrainConfig base;
  base.net = p0.config;
  for (int term = 0; term < kTerms; ++term) {
    TrainConfig c = base;
    LossWeights& w = c.weights;
    for (double* wp : {&w.surface, &w.normal, &w.maximal, &w.inscribed, &w.orthogonal, &w.eikonal, &w.minsurface,
                       &w.gradient})
      *wp = 0.0;
    w.curvature_start = w.curvature_end = 300.0;  // weight 1e-300
    switch (term) {
      case kSurface: w.surface = 1; break;
      case kNormal: w.normal = 1; break;
      case kMaximal: w.maximal = 1; break;
      case kInscribed: w.inscribed = 1; break;
      case kOrthogonal: w.orthogonal = 1; break;
      case kEikonal: w.eikonal = 1; break;
      case kMinSurface: w.minsurface = 1; break;
      case kCurvature: w.curvature_start = w.curvature_end = 0.0; break;
      case kGradient: w.gradient = 1; break;
    }
    param_check(c, kTermNames[term], 0.0);
  }
  param_check(base, "full objective", 0.5);

  double worst_input = 0.0;
  Rng prng(8);
  for (int i = 0; i < 500; ++i) {
    const Vec3 x = uniform_in_box(disk.bounds(), 2, prng);
    const Vec3 g = input_gradient(p0, x);
    Vec3 fd = Vec3::Zero();
    for (int k = 0; k < 2; ++k)
      fd[k] = (forward(p0, x + h * axis_vector(k)).phi - forward(p0, x - h * axis_vector(k)).phi) / (2 * h);
    worst_input = std::max(worst_input, (g - fd).norm() / std::max(fd.norm(), 1e-6));
  }
  return {worst < 1e-3 && worst_input < 1e-3,
          fmt("%zu parameters; worst parameter-gradient rel err %.2e (%s) over 9 terms + full objective; worst input "
              "gradient rel err %.2e at 500 points",
              static_cast<std::size_t>(p0.num_params()), worst, worst_name.c_str(), worst_input)};
}

// ---------------------------------------------------------------------------

Outcome mfao_properties() {
  const AoParams ao;  // a = 1.5, p = 0.2
  const double knee = std::pow(1.0 / ao.a, 1.0 / ao.p);
  const AnalyticField f = bundled_scene("sphere_plane").field();
  const TraceConfig cfg = TraceConfig::for_field(f);
  const double eps_off = 2.0 * cfg.epsilon;
  const Vec3 y(1.0, 0.0, 0.0);  // on the sphere
  int range_fail = 0, iff_fail = 0, tested = 0;
  Rng rng(5);
  std::uniform_real_distribution<double> lu(-20.0, 5.0);
  for (int i = 0; i < 20000; ++i) {
    const double v = i % 2 ? std::exp(lu(rng)) : knee * (1.0 + std::uniform_real_distribution<double>(-1e-6, 1e-6)(rng));
    const FunctionMedialField c([v](const Vec3&) { return MfValue{v, false}; });
    const double o = mfao(c, f, y, ao.a, ao.p, eps_off);
    ++tested;
    if (!(o >= 0.0 && o <= 1.0)) ++range_fail;
    if ((o == 1.0) != (v >= knee)) ++iff_fail;
  }
  // Oracle MF at surface points of the grazing scene.
  const OracleMedialField mf(f);
  const SurfaceSampler sampler(f);
  std::vector<Vec3> surf;
  for (int i = 0; i < 2000; ++i) surf.push_back(sampler.sample(rng).point);
  for (const Vec3& s : surf) {
    const double o = mfao(mf, f, s, ao.a, ao.p, eps_off);
    if (!(o >= 0.0 && o <= 1.0)) ++range_fail;
  }

  // View independence: the same surface points seen from 8 poses.
  int view_fail = 0, traced = 0;
  double traced_spread = 0.0;
  const auto poses = random_poses(f, 8, 9, 8, 8);
  for (int i = 0; i < 64; ++i) {
    const Vec3& s = surf[i];
    const double ref = mfao(mf, f, s, ao.a, ao.p, eps_off);
    const Rgb ref_rgb = shade_hit(f, &mf, s, Shading::LambertAo, cfg, ao);
    double lo = 1e300, hi = -1e300;
    for (const Camera& cam : poses) {
      if (mfao(mf, f, s, ao.a, ao.p, eps_off) != ref || !(shade_hit(f, &mf, s, Shading::LambertAo, cfg, ao) == ref_rgb))
        ++view_fail;
      // Trace toward the point; where the point is visible the hit must
      // shade like the point itself.
      const Ray ray{cam.eye, (s - cam.eye).normalized()};
      const TraceResult r = medial_trace(f, mf, ray, cfg);
      if (r.status != TraceStatus::Hit || (r.point - s).norm() > 10.0 * cfg.epsilon) continue;
      const double o = mfao(mf, f, r.point, ao.a, ao.p, eps_off);
      lo = std::min(lo, o), hi = std::max(hi, o);
      ++traced;
    }
    if (hi >= lo) traced_spread = std::max(traced_spread, hi - lo);
  }
  return {range_fail == 0 && iff_fail == 0 && view_fail == 0 && traced > 0 && traced_spread < 1e-2,
          fmt("%d MF values + 2000 oracle surface points: %d outside [0,1], %d violate 'AO = 1 iff MF >= %.6f'; "
              "%d view-dependent values over 8 poses; traced-hit AO spread %.1e over %d traced hits",
              tested, range_fail, iff_fail, knee, view_fail, traced_spread, traced)};
}

// ---------------------------------------------------------------------------

struct Criterion {
  const char* name;
  Outcome (*fn)();
};

const Criterion kCriteria[] = {
    {"oracle correctness", oracle_correctness},
    {"variational-constraint audit", constraint_audit},
    {"tracing step dominance", step_dominance},
    {"convergence speedup", convergence_speedup},
    {"render equivalence", render_equivalence},
    {"proxy pareto", proxy_pareto},
    {"fss properties", fss_properties},
    {"neural training", neural_training},
    {"gradient correctness", gradient_correctness},
    {"mfao properties", mfao_properties},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  int only = 0;
  app.add_option("--only", only, "Run a single criterion (1-10)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  bool all = true;
  for (int i = 1; i <= 10; ++i) {
    if (only && i != only) continue;
    const Criterion& c = kCriteria[i - 1];
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s %d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i, c.name, o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
