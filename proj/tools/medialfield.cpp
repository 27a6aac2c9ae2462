// medialfield: scene loading, baking, training, rendering, benchmarking,
// proxy generation and residual audits from one binary.
//
// Exit codes: 0 success, 1 runtime failure, 2 bad input.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "medial/grid.hpp"
#include "medial/medial_field.hpp"
#include "medial/nn/train.hpp"
#include "medial/proxy.hpp"
#include "medial/scene.hpp"
#include "medial/trace.hpp"
#include "medial/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace medial;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitBadInput = 2;

bool is_bad_input(Errc c) {
  switch (c) {
    case Errc::InvalidScene:
    case Errc::InvalidCheckpoint:
    case Errc::InvalidArgument:
    case Errc::BoundsDegenerate:
    case Errc::Dim2NotRenderable:
      return true;
    default:
      return false;
  }
}

// ---------------------------------------------------------------------------
// Manifests

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016zx", std::hash<std::string>{}(ss.str()));
  return buf;
}

/// What one invocation did: enough to rerun it and to check that the rerun
/// reproduced every output byte for byte.
struct Manifest {
  std::string command;
  std::vector<std::string> argv;
  std::string scene;
  json config = json::object();
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;

  void write(const std::string& path) const {
    json outs = json::array();
    for (const auto& o : outputs) outs.push_back({{"path", o}, {"digest", file_digest(o)}});
    const json j{{"command", command}, {"argv", argv},   {"cwd", fs::current_path().string()},
                 {"scene", scene},     {"config", config}, {"seed", seed},
                 {"version", kVersion}, {"outputs", outs}};
    std::ofstream out(path);
    out << j.dump(2) << '\n';
    if (!out) throw Error(Errc::Io, "cannot write manifest '" + path + "'");
  }
};

std::string manifest_path_for(const std::string& out) { return out + ".manifest.json"; }

std::ofstream open_output(const std::string& path, bool binary = false) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw Error(Errc::Io, "cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_input(const std::string& path, Errc code) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(code, "cannot open '" + path + "'");
  return in;
}

// ---------------------------------------------------------------------------
// Scenes and flag defaults

Scene resolve_scene(const std::string& ref) {
  if (fs::is_regular_file(ref)) return load_scene(ref);
  for (int d : {2, 3})
    for (const auto& n : bundled_scene_names(d))
      if (n == ref) return bundled_scene(ref);
  throw Error(Errc::InvalidScene, "'" + ref + "' is neither a scene file nor a bundled scene name");
}

/// Flag given on the command line wins, then the scene file's "defaults"
/// entry of the same name, then the built-in value already in `v`.
template <class T>
void apply_default(const CLI::Option* opt, T& v, const Scene& scene, const std::string& key) {
  if (opt->count() > 0 || !scene.defaults.contains(key)) return;
  try {
    v = scene.defaults.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(Errc::InvalidScene, "scene default '" + key + "' has the wrong type");
  }
}

std::array<int, 3> lattice_res(const Aabb& b, int dim, int n) {
  if (n < 2) throw Error(Errc::InvalidArgument, "--res must be >= 2");
  double longest = 0.0;
  for (int a = 0; a < dim; ++a) longest = std::max(longest, b.hi[a] - b.lo[a]);
  const double cell = longest / (n - 1);
  std::array<int, 3> r{1, 1, 1};
  for (int a = 0; a < dim; ++a) r[a] = std::max(2, static_cast<int>(std::ceil((b.hi[a] - b.lo[a]) / cell - 1e-9)) + 1);
  return r;
}

Aabb bake_bounds(const DistanceField& f) { return f.bounds().padded(0.05 * f.diagonal(), f.dim()); }

std::pair<std::string, std::string> mf_grid_paths(const std::string& base) {
  return {base + ".interior.grid", base + ".exterior.grid"};
}

// ---------------------------------------------------------------------------
// MF backends

struct MfBackend {
  std::unique_ptr<nn::Checkpoint> ckpt;
  std::unique_ptr<DistanceField> neural_field;
  std::unique_ptr<MedialField> mf;
  const DistanceField* geometry = nullptr;
};

struct BackendFlags {
  std::string mf = "oracle";
  std::string ckpt;
  std::string mf_grid;
  int grid_res = 96;
};

nn::Checkpoint load_checkpoint(const std::string& path, int dim) {
  std::ifstream in = open_input(path, Errc::InvalidCheckpoint);
  nn::Checkpoint ck = nn::read_checkpoint(in);
  if (ck.params.config.dim != dim)
    throw Error(Errc::InvalidCheckpoint, "checkpoint is " + std::to_string(ck.params.config.dim) + "D, scene is " +
                                             std::to_string(dim) + "D");
  return ck;
}

/// `neural_geometry` renders the network's own Phi; otherwise the analytic
/// field stays the geometry and only MF comes from the network.
MfBackend make_backend(const BackendFlags& f, const AnalyticField& gt, bool neural_geometry) {
  MfBackend b;
  b.geometry = &gt;
  const OracleConfig oc = OracleConfig::for_field(gt);
  if (f.mf == "oracle") {
    b.mf = std::make_unique<OracleMedialField>(gt, oc);
  } else if (f.mf == "grid") {
    GridField in, ex;
    double r_max = oc.r_max;
    if (!f.mf_grid.empty()) {
      const auto [pi, pe] = mf_grid_paths(f.mf_grid);
      json h;
      std::ifstream si = open_input(pi, Errc::InvalidArgument), se = open_input(pe, Errc::InvalidArgument);
      in = read_grid(si, &h);
      ex = read_grid(se);
      r_max = h.value("r_max", r_max);
      if (in.dim != gt.dim() || ex.dim != gt.dim()) throw Error(Errc::InvalidArgument, "MF grid dimension does not match the scene");
    } else {
      const Aabb bb = bake_bounds(gt);
      const auto res = lattice_res(bb, gt.dim(), f.grid_res);
      in = bake_mf_grid(gt, oc, bb, res, Side::Interior);
      ex = bake_mf_grid(gt, oc, bb, res, Side::Exterior);
    }
    b.mf = std::make_unique<GridMedialField>(gt, std::move(in), std::move(ex), r_max);
  } else if (f.mf == "neural") {
    if (f.ckpt.empty()) throw Error(Errc::InvalidArgument, "--mf neural needs --ckpt");
    b.ckpt = std::make_unique<nn::Checkpoint>(load_checkpoint(f.ckpt, gt.dim()));
    b.mf = std::make_unique<nn::NeuralMedialField>(b.ckpt->params);
    if (neural_geometry) {
      b.neural_field = std::make_unique<nn::NeuralDistanceField>(b.ckpt->params, b.ckpt->bounds);
      b.geometry = b.neural_field.get();
    }
  } else {
    throw Error(Errc::InvalidArgument, "unknown --mf '" + f.mf + "'");
  }
  return b;
}

json backend_json(const BackendFlags& f) {
  json j{{"mf", f.mf}};
  if (f.mf == "neural") j["ckpt"] = f.ckpt;
  if (f.mf == "grid") {
    if (f.mf_grid.empty()) j["grid_res"] = f.grid_res;
    else j["mf_grid"] = f.mf_grid;
  }
  return j;
}

void add_backend_flags(CLI::App* sub, BackendFlags& f) {
  sub->add_option("--mf", f.mf, "Medial field backend")->check(CLI::IsMember({"oracle", "grid", "neural"}));
  sub->add_option("--ckpt", f.ckpt, "Network checkpoint for --mf neural");
  sub->add_option("--mf-grid", f.mf_grid, "Baked MF grid base path for --mf grid (omit to bake in memory)");
  sub->add_option("--grid-res", f.grid_res, "Nodes along the longest axis when baking in memory");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// render

struct RenderFlags {
  std::string scene;
  std::string backend = "medial";
  BackendFlags mf;
  std::string shading = "lambert_ao";
  std::vector<double> camera;
  int width = 256, height = 256;
  double lambda = 1.0;
  std::string view;
  std::string out;
  std::string stats;
  std::uint64_t seed = 0;
  CLI::Option *o_width = nullptr, *o_height = nullptr, *o_shading = nullptr, *o_lambda = nullptr;
};

Shading parse_shading(const std::string& s) {
  if (s == "normal") return Shading::Normal;
  if (s == "lambert") return Shading::Lambert;
  return Shading::LambertAo;
}

int cmd_render(RenderFlags& f, Manifest& man) {
  const Scene scene = resolve_scene(f.scene);
  apply_default(f.o_width, f.width, scene, "width");
  apply_default(f.o_height, f.height, scene, "height");
  apply_default(f.o_shading, f.shading, scene, "shading");
  apply_default(f.o_lambda, f.lambda, scene, "lambda");
  const AnalyticField gt = scene.field();
  man.scene = f.scene;
  man.seed = f.seed;

  if (scene.dim == 2 || !f.view.empty()) {
    if (scene.dim != 2) throw Error(Errc::InvalidArgument, "--view is for 2D scenes");
    if (f.view.empty())
      throw Error(Errc::Dim2NotRenderable, "2D scenes have no perspective view; pass --view phi|mf");
    MfBackend b = make_backend(f.mf, gt, true);
    const double diag = gt.diagonal();
    std::function<double(const Vec3&)> fn;
    Palette pal{0.5 * diag, 0.05 * diag};
    if (f.view == "phi") {
      fn = [&](const Vec3& x) { return b.geometry->phi(x); };
    } else {
      // Signed by side so the two MF sides stay distinguishable.
      fn = [&](const Vec3& x) { return side_sign(b.geometry->phi(x)) * std::min(b.mf->value(x), diag); };
    }
    if (f.o_height->count() == 0 && !scene.defaults.contains("height")) {
      const Aabb bb = gt.bounds();
      f.height = std::max(2, static_cast<int>(std::lround(f.width * (bb.hi.y() - bb.lo.y()) / (bb.hi.x() - bb.lo.x()))));
    }
    const Image img = visualize_field_2d(fn, gt.bounds(), f.width, f.height, pal);
    {
      std::ofstream out = open_output(f.out, true);
      write_ppm(out, img);
      if (!out) throw Error(Errc::Io, "failed writing '" + f.out + "'");
    }
    man.config = {{"view", f.view}, {"width", f.width}, {"height", f.height}, {"backend", backend_json(f.mf)}};
    man.outputs = {f.out};
    man.write(manifest_path_for(f.out));
    return kExitOk;
  }

  MfBackend b = make_backend(f.mf, gt, true);
  Camera cam;
  if (f.camera.empty()) {
    // Three-quarter view from above; a seeded random pose if that eye is
    // inside the shape.
    const Aabb bb = b.geometry->bounds();
    cam.eye = bb.center() + 1.5 * bb.diagonal() * Vec3(0.6, 0.7, 1.0).normalized();
    cam.target = bb.center();
    cam.width = f.width;
    cam.height = f.height;
    if (b.geometry->phi(cam.eye) <= 1e-2 * bb.diagonal())
      cam = random_poses(*b.geometry, 1, f.seed, f.width, f.height).front();
  } else {
    if (f.camera.size() != 6 && f.camera.size() != 7)
      throw Error(Errc::InvalidArgument, "--camera takes ex,ey,ez,tx,ty,tz[,vfov]");
    cam.eye = Vec3(f.camera[0], f.camera[1], f.camera[2]);
    cam.target = Vec3(f.camera[3], f.camera[4], f.camera[5]);
    if (f.camera.size() == 7) cam.vfov_deg = f.camera[6];
    cam.width = f.width;
    cam.height = f.height;
  }
  TraceConfig tc = TraceConfig::for_field(*b.geometry);
  tc.radius_scale = f.lambda;
  const Backend be = f.backend == "naive" ? Backend::Naive : Backend::Medial;
  const Shading sh = parse_shading(f.shading);
  const RenderResult r = render(*b.geometry, b.mf.get(), cam, tc, be, sh);
  {
    std::ofstream out = open_output(f.out, true);
    write_ppm(out, r.image);
    if (!out) throw Error(Errc::Io, "failed writing '" + f.out + "'");
  }
  man.outputs = {f.out};
  if (!f.stats.empty()) {
    std::ofstream out = open_output(f.stats);
    std::size_t hits = 0, misses = 0, exhausted = 0;
    for (const auto& ray : r.rays) {
      if (ray.status == TraceStatus::Hit) ++hits;
      else if (ray.status == TraceStatus::Miss) ++misses;
      else ++exhausted;
    }
    out << "backend,rays,hits,misses,budget_exhausted,mean_iterations,max_iterations\n";
    out << backend_name(be) << ',' << r.rays.size() << ',' << hits << ',' << misses << ',' << exhausted << ','
        << fmt(r.stats.mean()) << ',' << (r.stats.histogram.empty() ? 0 : r.stats.histogram.size() - 1) << '\n';
    man.outputs.push_back(f.stats);
  }
  man.config = {{"backend", f.backend},
                {"mf", backend_json(f.mf)},
                {"shading", f.shading},
                {"width", f.width},
                {"height", f.height},
                {"lambda", f.lambda},
                {"camera", {cam.eye.x(), cam.eye.y(), cam.eye.z(), cam.target.x(), cam.target.y(), cam.target.z(), cam.vfov_deg}},
                {"epsilon", tc.epsilon}};
  man.write(manifest_path_for(f.out));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// bench

struct BenchFlags {
  std::string scene;
  BackendFlags mf;
  int poses = 16;
  int width = 128, height = 128;
  double lambda = 1.0;
  std::string out;
  std::string hist;
  std::uint64_t seed = 0;
  CLI::Option *o_poses = nullptr, *o_width = nullptr, *o_height = nullptr, *o_lambda = nullptr;
};

std::string default_hist_path(const std::string& out) {
  const fs::path p(out);
  return (p.parent_path() / (p.stem().string() + "_hist.csv")).string();
}

int cmd_bench(BenchFlags& f, Manifest& man) {
  const Scene scene = resolve_scene(f.scene);
  apply_default(f.o_poses, f.poses, scene, "poses");
  apply_default(f.o_width, f.width, scene, "width");
  apply_default(f.o_height, f.height, scene, "height");
  apply_default(f.o_lambda, f.lambda, scene, "lambda");
  const AnalyticField gt = scene.field();
  MfBackend b = make_backend(f.mf, gt, true);
  TraceConfig tc = TraceConfig::for_field(*b.geometry);
  tc.radius_scale = f.lambda;
  const BenchResult r = bench_poses(*b.geometry, *b.mf, f.poses, f.seed, tc, f.width, f.height);
  const double naive_mean = r.naive.mean();
  {
    std::ofstream out = open_output(f.out);
    out << "backend,Mean,Min,Max,poses,rays,frac_above_2x_naive_mean\n";
    for (const auto& [name, s] : {std::pair{"naive", &r.naive}, std::pair{"medial", &r.medial}})
      out << name << ',' << fmt(s->mean()) << ',' << fmt(s->min()) << ',' << fmt(s->max()) << ','
          << s->frame_means.size() << ',' << s->rays << ',' << fmt(s->fraction_above(2.0 * naive_mean)) << '\n';
  }
  const std::string hist = f.hist.empty() ? default_hist_path(f.out) : f.hist;
  {
    std::ofstream out = open_output(hist);
    out << "backend,iterations,count\n";
    for (const auto& [name, s] : {std::pair{"naive", &r.naive}, std::pair{"medial", &r.medial}})
      for (std::size_t i = 0; i < s->histogram.size(); ++i)
        if (s->histogram[i] > 0) out << name << ',' << i << ',' << s->histogram[i] << '\n';
  }
  man.scene = f.scene;
  man.seed = f.seed;
  man.config = {{"mf", backend_json(f.mf)}, {"poses", f.poses}, {"width", f.width},
                {"height", f.height},       {"lambda", f.lambda}, {"epsilon", tc.epsilon}};
  man.outputs = {f.out, hist};
  man.write(manifest_path_for(f.out));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// proxies

struct ProxyFlags {
  std::string scene;
  std::vector<std::size_t> budgets{12, 24, 48, 96, 192};
  bool spheres = false;
  std::size_t candidates = 4096;
  std::size_t samples = 4096;
  double epsilon = 0.05;
  std::string out;
  std::uint64_t seed = 0;
  CLI::Option *o_budgets = nullptr, *o_candidates = nullptr, *o_samples = nullptr, *o_epsilon = nullptr;
};

int cmd_proxies(ProxyFlags& f, Manifest& man) {
  const Scene scene = resolve_scene(f.scene);
  apply_default(f.o_budgets, f.budgets, scene, "budgets");
  apply_default(f.o_candidates, f.candidates, scene, "candidates");
  apply_default(f.o_samples, f.samples, scene, "samples");
  apply_default(f.o_epsilon, f.epsilon, scene, "epsilon");
  if (f.budgets.empty()) throw Error(Errc::InvalidArgument, "--budgets is empty");
  if (!(f.epsilon >= 0.0)) throw Error(Errc::InvalidArgument, "--epsilon must be >= 0");
  const AnalyticField gt = scene.field();
  const OracleMedialField oracle(gt);
  std::vector<std::size_t> budgets = f.budgets;
  if (f.spheres)
    for (auto& b : budgets) b *= static_cast<std::size_t>(gt.dim() + 1);
  ParetoConfig pc = ParetoConfig::for_field(gt);
  pc.n_candidates = f.candidates;
  pc.n_surface_samples = f.samples;
  pc.epsilon = f.epsilon * gt.diagonal();
  pc.seed = f.seed;

  fs::create_directories(f.out);
  const std::string mpath = (fs::path(f.out) / "manifest.json").string();
  std::vector<std::string> outputs;
  const auto rows = pareto_report(gt, oracle, budgets, pc, [&](std::size_t budget, const ProxySet* s, const GridField* g) {
    const std::string stem = std::string(s ? proxy_kind_name(s->kind) : "sdf_grid") + "_" + std::to_string(budget);
    if (s) {
      const std::string path = (fs::path(f.out) / (stem + ".json")).string();
      json j = proxy_to_json(*s);
      j["manifest"] = "manifest.json";
      std::ofstream out = open_output(path);
      out << j.dump(2) << '\n';
      outputs.push_back(path);
    } else {
      const std::string path = (fs::path(f.out) / (stem + ".grid")).string();
      std::ofstream out = open_output(path, true);
      write_grid(out, *g, {{"manifest", "manifest.json"}});
      outputs.push_back(path);
    }
  });
  const std::string csv = (fs::path(f.out) / "pareto.csv").string();
  {
    std::ofstream out = open_output(csv);
    out << "kind,budget,floats,mae_percent\n";
    for (const auto& r : rows)
      out << proxy_kind_name(r.kind) << ',' << r.budget << ',' << r.floats << ',' << fmt(r.mae_percent) << '\n';
  }
  outputs.insert(outputs.begin(), csv);
  man.scene = f.scene;
  man.seed = f.seed;
  man.config = {{"budgets_floats", budgets},
                {"candidates", f.candidates},
                {"samples", f.samples},
                {"epsilon_diag_fraction", f.epsilon}};
  man.outputs = outputs;
  man.write(mpath);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train

struct TrainFlags {
  std::string scene;
  int steps = 20000;
  int batch = 128;
  double lr = 1e-3;
  double sigma = 0.5;
  bool ablate = false;
  std::string out;
  std::string loss;
  std::uint64_t seed = 0;
  bool quiet = false;
  CLI::Option *o_steps = nullptr, *o_batch = nullptr, *o_lr = nullptr, *o_sigma = nullptr;
};

int cmd_train(TrainFlags& f, Manifest& man) {
  const Scene scene = resolve_scene(f.scene);
  apply_default(f.o_steps, f.steps, scene, "steps");
  apply_default(f.o_batch, f.batch, scene, "batch");
  apply_default(f.o_lr, f.lr, scene, "lr");
  apply_default(f.o_sigma, f.sigma, scene, "sigma_volume");
  const AnalyticField gt = scene.field();
  nn::TrainConfig tc;
  tc.steps = f.steps;
  tc.batch_size = f.batch;
  tc.lr = f.lr;
  tc.sigma_volume = f.sigma;
  tc.seed = f.seed;
  tc.ablate_medial = f.ablate;
  tc.net.dim = gt.dim();
  tc.validate();

  const std::string loss_path = f.loss.empty() ? f.out + ".loss.csv" : f.loss;
  std::ofstream loss = open_output(loss_path);
  nn::write_loss_header(loss);
  const int report_every = std::max(1, f.steps / 20);
  nn::Checkpoint ck;
  ck.params = nn::train(gt, tc, [&](const nn::StepLog& s) {
    nn::write_loss_row(loss, s);
    if (!f.quiet && (s.step % report_every == 0 || s.step + 1 == f.steps))
      std::fprintf(stderr, "step %6d  loss %.6g\n", s.step, s.loss.total);
  });
  loss.close();
  if (!loss) throw Error(Errc::Io, "failed writing '" + loss_path + "'");
  ck.bounds = gt.bounds();
  ck.extra = {{"manifest", fs::path(manifest_path_for(f.out)).filename().string()},
              {"scene", scene.name},
              {"steps", f.steps},
              {"ablate_medial", f.ablate},
              {"surface_mae_percent", nn::network_surface_mae(ck.params, gt, 4096, f.seed + 1)}};
  {
    std::ofstream out = open_output(f.out, true);
    nn::write_checkpoint(out, ck);
  }
  if (!f.quiet) std::fprintf(stderr, "surface MAE %.4f%% of diag\n", ck.extra["surface_mae_percent"].get<double>());
  man.scene = f.scene;
  man.seed = f.seed;
  man.config = {{"steps", f.steps},
                {"batch", f.batch},
                {"lr", f.lr},
                {"sigma_volume", f.sigma},
                {"ablate_medial", f.ablate},
                {"architecture", nn::mlp_config_json(tc.net)}};
  man.outputs = {f.out, loss_path};
  man.write(manifest_path_for(f.out));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// audit

struct AuditFlags {
  std::string scene;
  BackendFlags mf;
  int samples = 2000;
  std::string out;
  bool check = false;
  std::uint64_t seed = 0;
  CLI::Option* o_samples = nullptr;
};

struct Distribution {
  std::vector<double> values;
  std::size_t excluded = 0;
  double threshold = 0.0;
};

int cmd_audit(AuditFlags& f, Manifest& man) {
  const Scene scene = resolve_scene(f.scene);
  apply_default(f.o_samples, f.samples, scene, "samples");
  if (f.samples < 1) throw Error(Errc::InvalidArgument, "--samples must be >= 1");
  const AnalyticField gt = scene.field();
  // Residuals always measure MF against the true geometry.
  MfBackend b = make_backend(f.mf, gt, false);
  const double diag = gt.diagonal();
  const double margin = 1e-3 * diag;

  Rng rng(f.seed);
  std::vector<Vec3> pts(static_cast<std::size_t>(f.samples));
  for (auto& p : pts) p = uniform_in_box(gt.bounds(), gt.dim(), rng);

  enum { kMax, kIns, kOrth, kSpoke, kCount };
  struct PointResult {
    std::array<std::optional<double>, kCount> v;
  };
  std::vector<PointResult> res(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    const Vec3& x = pts[i];
    PointResult& r = res[i];
    r.v[kMax] = residual_maximality(*b.mf, gt, x);
    const Residual ins = residual_inscription(*b.mf, gt, x);
    if (!ins.clamped) r.v[kIns] = ins.value;
    try {
      r.v[kOrth] = residual_orthogonality(*b.mf, gt, x);
    } catch (const Error& e) {
      if (e.code() != Errc::ExcludedRegion && e.code() != Errc::GradientUndefined) throw;
    }
    if (!ins.clamped) {
      try {
        r.v[kSpoke] = spoke_constancy_check(*b.mf, gt, x, 8, margin);
      } catch (const Error& e) {
        if (e.code() != Errc::GradientUndefined) throw;
      }
    }
  });

  const char* names[kCount] = {"maximality", "inscription", "orthogonality", "spoke_constancy"};
  const char* reasons[kCount] = {"none", "clamped", "boundary_or_medial_band", "clamped_or_on_medial_locus"};
  std::array<Distribution, kCount> dist;
  dist[kMax].threshold = 0.0;
  dist[kIns].threshold = 1e-4 * diag;
  dist[kOrth].threshold = 1e-3;
  dist[kSpoke].threshold = 1e-4 * diag;
  for (const auto& r : res)
    for (int k = 0; k < kCount; ++k) {
      if (r.v[k]) dist[k].values.push_back(*r.v[k]);
      else ++dist[k].excluded;
    }

  bool all_pass = true;
  {
    std::ofstream out = open_output(f.out);
    out << "residual,evaluated,excluded,exclusion_reason,mean,p50,p95,p99,max,threshold,pass\n";
    for (int k = 0; k < kCount; ++k) {
      auto& v = dist[k].values;
      std::sort(v.begin(), v.end());
      auto q = [&](double p) { return v.empty() ? 0.0 : v[std::min(v.size() - 1, static_cast<std::size_t>(p * v.size()))]; };
      double sum = 0.0;
      for (double x : v) sum += x;
      const double mx = v.empty() ? 0.0 : v.back();
      const bool pass = mx <= dist[k].threshold;
      all_pass = all_pass && pass;
      out << names[k] << ',' << v.size() << ',' << dist[k].excluded << ',' << reasons[k] << ','
          << fmt(v.empty() ? 0.0 : sum / v.size()) << ',' << fmt(q(0.5)) << ',' << fmt(q(0.95)) << ',' << fmt(q(0.99))
          << ',' << fmt(mx) << ',' << fmt(dist[k].threshold) << ',' << (pass ? "yes" : "no") << '\n';
    }
  }
  man.scene = f.scene;
  man.seed = f.seed;
  man.config = {{"mf", backend_json(f.mf)}, {"samples", f.samples}, {"spoke_margin", margin}, {"spoke_points", 8}};
  man.outputs = {f.out};
  man.write(manifest_path_for(f.out));
  if (f.check && !all_pass) {
    std::fprintf(stderr, "audit: residuals above threshold (see %s)\n", f.out.c_str());
    return kExitRuntime;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// bake

struct BakeFlags {
  std::string scene;
  std::string what = "mf";
  int res = 128;
  std::string out;
  std::uint64_t seed = 0;
  CLI::Option* o_res = nullptr;
};

int cmd_bake(BakeFlags& f, Manifest& man) {
  const Scene scene = resolve_scene(f.scene);
  apply_default(f.o_res, f.res, scene, "res");
  const AnalyticField gt = scene.field();
  const Aabb bb = bake_bounds(gt);
  const auto res = lattice_res(bb, gt.dim(), f.res);
  const std::string mname = fs::path(manifest_path_for(f.out)).filename().string();
  if (f.what == "sdf") {
    const GridField g = bake_grid(gt, bb, res);
    std::ofstream out = open_output(f.out, true);
    write_grid(out, g, {{"manifest", mname}, {"scene", scene.name}, {"quantity", "sdf"}});
    man.outputs = {f.out};
  } else {
    const OracleConfig oc = OracleConfig::for_field(gt);
    const auto [pi, pe] = mf_grid_paths(f.out);
    for (const auto& [side, path] : {std::pair{Side::Interior, pi}, std::pair{Side::Exterior, pe}}) {
      const GridField g = bake_mf_grid(gt, oc, bb, res, side);
      std::ofstream out = open_output(path, true);
      write_grid(out, g, {{"manifest", mname}, {"scene", scene.name}, {"quantity", "mf"}, {"r_max", oc.r_max}});
    }
    man.outputs = {pi, pe};
  }
  man.scene = f.scene;
  man.seed = f.seed;
  man.config = {{"what", f.what}, {"res", std::vector<int>(res.begin(), res.begin() + gt.dim())}};
  man.write(manifest_path_for(f.out));
  return kExitOk;
}

// ---------------------------------------------------------------------------

int run(const std::vector<std::string>& args, bool allow_replay);

int cmd_replay(const std::string& manifest_path, bool verify) {
  std::ifstream in = open_input(manifest_path, Errc::InvalidArgument);
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("malformed manifest: ") + e.what());
  }
  if (!m.contains("argv") || !m.contains("outputs")) throw Error(Errc::InvalidArgument, "manifest lacks argv/outputs");
  const auto argv = m["argv"].get<std::vector<std::string>>();
  const fs::path here = fs::current_path();
  fs::current_path(m.value("cwd", here.string()));
  const int rc = run(argv, false);
  int mismatches = 0;
  if (rc == kExitOk && verify) {
    for (const auto& o : m["outputs"]) {
      const std::string path = o.at("path"), want = o.at("digest");
      const std::string got = file_digest(path);
      if (got != want) {
        std::fprintf(stderr, "replay: %s differs (%s, recorded %s)\n", path.c_str(), got.c_str(), want.c_str());
        ++mismatches;
      }
    }
    if (mismatches == 0) std::fprintf(stderr, "replay: %zu outputs identical\n", m["outputs"].size());
  }
  fs::current_path(here);
  if (rc != kExitOk) return rc;
  return mismatches ? kExitRuntime : kExitOk;
}

int run(const std::vector<std::string>& args, bool allow_replay) {
  CLI::App app{"Medial fields: bake, train, render, benchmark, proxies and audits", "medialfield"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  auto scene_arg = [](CLI::App* sub, std::string& s) {
    sub->add_option("scene", s, "Scene JSON file or bundled scene name")->required();
  };

  RenderFlags rf;
  auto* render_cmd = app.add_subcommand("render", "Render one view (3D) or a field image (2D)");
  scene_arg(render_cmd, rf.scene);
  render_cmd->add_option("--backend", rf.backend, "Tracer")->check(CLI::IsMember({"naive", "medial"}));
  add_backend_flags(render_cmd, rf.mf);
  rf.o_shading = render_cmd->add_option("--shading", rf.shading, "Shading")
                     ->check(CLI::IsMember({"normal", "lambert", "lambert_ao"}));
  render_cmd->add_option("--camera", rf.camera, "ex,ey,ez,tx,ty,tz[,vfov]")
      ->delimiter(',');
  rf.o_width = render_cmd->add_option("--width", rf.width);
  rf.o_height = render_cmd->add_option("--height", rf.height);
  rf.o_lambda = render_cmd->add_option("--lambda", rf.lambda, "Medial sphere radius scale in (0,1]");
  render_cmd->add_option("--view", rf.view, "2D scenes: colour-map phi or mf")->check(CLI::IsMember({"phi", "mf"}));
  render_cmd->add_option("--out", rf.out, "Output PPM")->required();
  render_cmd->add_option("--stats", rf.stats, "Iteration statistics CSV");
  render_cmd->add_option("--seed", rf.seed);

  BenchFlags bf;
  auto* bench_cmd = app.add_subcommand("bench", "Iteration counts of both tracers over random poses");
  scene_arg(bench_cmd, bf.scene);
  add_backend_flags(bench_cmd, bf.mf);
  bf.o_poses = bench_cmd->add_option("--poses", bf.poses);
  bf.o_width = bench_cmd->add_option("--width", bf.width);
  bf.o_height = bench_cmd->add_option("--height", bf.height);
  bf.o_lambda = bench_cmd->add_option("--lambda", bf.lambda);
  bench_cmd->add_option("--out", bf.out, "Summary CSV")->required();
  bench_cmd->add_option("--hist", bf.hist, "Histogram CSV (default <out>_hist.csv)");
  bench_cmd->add_option("--seed", bf.seed);

  ProxyFlags pf;
  auto* proxy_cmd = app.add_subcommand("proxies", "Collision proxies and the MAE-vs-memory table");
  scene_arg(proxy_cmd, pf.scene);
  pf.o_budgets = proxy_cmd->add_option("--budgets", pf.budgets, "Memory budgets in floats")->delimiter(',');
  proxy_cmd->add_flag("--spheres", pf.spheres, "Read --budgets as sphere counts");
  pf.o_candidates = proxy_cmd->add_option("--candidates", pf.candidates, "Medial sphere candidates");
  pf.o_samples = proxy_cmd->add_option("--samples", pf.samples, "Surface samples for the MAE");
  pf.o_epsilon = proxy_cmd->add_option("--epsilon", pf.epsilon, "FSS epsilon as a fraction of the diagonal");
  proxy_cmd->add_option("--out", pf.out, "Output directory")->required();
  proxy_cmd->add_option("--seed", pf.seed);

  TrainFlags tf;
  auto* train_cmd = app.add_subcommand("train", "Train the neural distance + medial field");
  scene_arg(train_cmd, tf.scene);
  tf.o_steps = train_cmd->add_option("--steps", tf.steps);
  tf.o_batch = train_cmd->add_option("--batch", tf.batch, "Surface samples per step (same again for volume)");
  tf.o_lr = train_cmd->add_option("--lr", tf.lr);
  tf.o_sigma = train_cmd->add_option("--sigma", tf.sigma, "Volume offset std dev as a fraction of the diagonal");
  train_cmd->add_flag("--ablate-medial", tf.ablate, "Zero the maximal, inscribed and orthogonal weights");
  train_cmd->add_option("--out", tf.out, "Checkpoint path")->required();
  train_cmd->add_option("--loss", tf.loss, "Loss CSV (default <out>.loss.csv)");
  train_cmd->add_option("--seed", tf.seed);
  train_cmd->add_flag("--quiet", tf.quiet);

  AuditFlags af;
  auto* audit_cmd = app.add_subcommand("audit", "Residual distributions of a medial field");
  scene_arg(audit_cmd, af.scene);
  add_backend_flags(audit_cmd, af.mf);
  af.o_samples = audit_cmd->add_option("--samples", af.samples);
  audit_cmd->add_option("--out", af.out, "Residual CSV")->required();
  audit_cmd->add_flag("--check", af.check, "Exit 1 when a residual exceeds its threshold");
  audit_cmd->add_option("--seed", af.seed);

  BakeFlags kf;
  auto* bake_cmd = app.add_subcommand("bake", "Bake SDF or both MF sides onto a lattice");
  scene_arg(bake_cmd, kf.scene);
  bake_cmd->add_option("--what", kf.what)->check(CLI::IsMember({"sdf", "mf"}));
  kf.o_res = bake_cmd->add_option("--res", kf.res, "Nodes along the longest axis");
  bake_cmd->add_option("--out", kf.out, "Grid path (mf writes <out>.interior.grid and <out>.exterior.grid)")->required();
  bake_cmd->add_option("--seed", kf.seed, "Accepted for uniformity; baking draws no random numbers");

  std::string replay_path;
  bool no_verify = false;
  auto* replay_cmd = app.add_subcommand("replay", "Rerun a manifest and compare output digests");
  replay_cmd->add_option("manifest", replay_path)->required();
  replay_cmd->add_flag("--no-verify", no_verify);

  std::vector<const char*> cargv{"medialfield"};
  for (const auto& a : args) cargv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitBadInput;
  }

  Manifest man;
  man.argv = args;
  if (render_cmd->parsed()) return man.command = "render", cmd_render(rf, man);
  if (bench_cmd->parsed()) return man.command = "bench", cmd_bench(bf, man);
  if (proxy_cmd->parsed()) return man.command = "proxies", cmd_proxies(pf, man);
  if (train_cmd->parsed()) return man.command = "train", cmd_train(tf, man);
  if (audit_cmd->parsed()) return man.command = "audit", cmd_audit(af, man);
  if (bake_cmd->parsed()) return man.command = "bake", cmd_bake(kf, man);
  if (!allow_replay) throw Error(Errc::InvalidArgument, "a manifest cannot replay another replay");
  return cmd_replay(replay_path, !no_verify);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(std::vector<std::string>(argv + 1, argv + argc), true);
  } catch (const Error& e) {
    std::fprintf(stderr, "medialfield: %s\n", e.what());
    return is_bad_input(e.code()) ? kExitBadInput : kExitRuntime;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "medialfield: %s\n", e.what());
    return kExitRuntime;
  }
}
