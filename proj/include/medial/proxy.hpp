#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "medial/error.hpp"
#include "medial/grid.hpp"
#include "medial/medial_field.hpp"
#include "medial/parallel.hpp"
#include "medial/shapes.hpp"

namespace medial {

struct ProxySphere {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
};

enum class ProxyKind { Medial, Tangent, Uniform, SdfGrid };

inline const char* proxy_kind_name(ProxyKind k) {
  switch (k) {
    case ProxyKind::Medial: return "medial";
    case ProxyKind::Tangent: return "tangent";
    case ProxyKind::Uniform: return "uniform";
    case ProxyKind::SdfGrid: return "sdf_grid";
  }
  return "?";
}

struct ProxySet {
  ProxyKind kind = ProxyKind::Medial;
  int dim = 2;
  std::uint64_t seed = 0;
  std::vector<ProxySphere> spheres;

  /// Center plus radius per sphere.
  std::size_t memory_floats() const { return spheres.size() * static_cast<std::size_t>(dim + 1); }

  /// min_i (|y - c_i| - r_i).
  double phi(const Vec3& y) const {
    double v = kInf;
    for (const auto& s : spheres) v = std::min(v, (y - s.center).norm() - s.radius);
    return v;
  }
};

struct FssConfig {
  std::size_t n_candidates = 4096;
  std::size_t m_select = 16;
  double epsilon = 0.0;
  std::uint64_t seed = 0;

  /// epsilon = 0.05 diag.
  static FssConfig for_field(const DistanceField& field) {
    FssConfig c;
    c.epsilon = 0.05 * field.diagonal();
    return c;
  }
};

namespace detail {

/// Keeps the first of any group of centers closer than `radius`.
inline std::vector<ProxySphere> dedup_centers(const std::vector<ProxySphere>& in, double radius) {
  struct KeyHash {
    std::size_t operator()(const std::array<std::int64_t, 3>& k) const {
      return static_cast<std::size_t>(k[0] * 73856093LL ^ k[1] * 19349663LL ^ k[2] * 83492791LL);
    }
  };
  std::unordered_map<std::array<std::int64_t, 3>, std::vector<std::size_t>, KeyHash> cells;
  std::vector<ProxySphere> out;
  auto key_of = [&](const Vec3& c) {
    return std::array<std::int64_t, 3>{static_cast<std::int64_t>(std::floor(c.x() / radius)),
                                       static_cast<std::int64_t>(std::floor(c.y() / radius)),
                                       static_cast<std::int64_t>(std::floor(c.z() / radius))};
  };
  for (const auto& s : in) {
    const auto k = key_of(s.center);
    bool dup = false;
    for (int dx = -1; dx <= 1 && !dup; ++dx)
      for (int dy = -1; dy <= 1 && !dup; ++dy)
        for (int dz = -1; dz <= 1 && !dup; ++dz) {
          const auto it = cells.find({k[0] + dx, k[1] + dy, k[2] + dz});
          if (it == cells.end()) continue;
          for (std::size_t idx : it->second)
            if ((out[idx].center - s.center).norm() <= radius) {
              dup = true;
              break;
            }
        }
    if (dup) continue;
    cells[k].push_back(out.size());
    out.push_back(s);
  }
  return out;
}

}  // namespace detail

/// Uniform interior points mapped along their spokes to (medial center, MF).
/// Clamped (exterior) spheres are dropped and centers within 1e-5 diag of an
/// earlier one are merged.
inline std::vector<ProxySphere> sample_medial_candidates(const DistanceField& field, const MedialField& mf,
                                                         std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  const std::vector<Vec3> pts = sample_interior(field, n, rng);
  std::vector<ProxySphere> raw(pts.size());
  std::vector<char> keep(pts.size(), 1);
  parallel_for(pts.size(), [&](std::size_t i) {
    const Vec3& x = pts[i];
    const FieldSample s = field.sample(x);
    if (!s.grad) {
      raw[i] = {x, std::abs(s.phi)};
      return;
    }
    const MfValue v = mf.mf(x);
    if (v.clamped || !(v.value > 0.0)) {
      keep[i] = 0;
      return;
    }
    raw[i] = {x + side_sign(s.phi) * *s.grad * (v.value - std::abs(s.phi)), v.value};
  });
  std::vector<ProxySphere> kept;
  for (std::size_t i = 0; i < raw.size(); ++i)
    if (keep[i]) kept.push_back(raw[i]);
  return detail::dedup_centers(kept, 1e-5 * field.diagonal());
}

struct FssResult {
  std::vector<std::size_t> order;
  /// Min normalized separation achieved by each pick after the seed.
  std::vector<double> separations;
};

/// Greedy furthest sphere sampling. The seed is the largest sphere; each
/// next pick maximizes min_m |x_n - x_m| / (r_n + r_m + eps) over the picks
/// so far. Ties go to the lowest index.
inline FssResult furthest_sphere_sampling(const std::vector<ProxySphere>& cands, std::size_t m, double eps) {
  if (cands.empty()) throw Error(Errc::NotEnoughCandidates, "no candidate spheres");
  if (m > cands.size()) throw Error(Errc::NotEnoughCandidates, "asked for more spheres than candidates");
  if (eps < 0.0) throw Error(Errc::InvalidArgument, "epsilon must be >= 0");
  FssResult r;
  if (m == 0) return r;
  std::size_t seed = 0;
  for (std::size_t i = 1; i < cands.size(); ++i)
    if (cands[i].radius > cands[seed].radius) seed = i;
  std::vector<double> sep(cands.size(), kInf);
  std::vector<char> taken(cands.size(), 0);
  auto pick = [&](std::size_t j) {
    taken[j] = 1;
    r.order.push_back(j);
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (taken[i]) continue;
      const double s = (cands[i].center - cands[j].center).norm() / (cands[i].radius + cands[j].radius + eps);
      sep[i] = std::min(sep[i], s);
    }
  };
  pick(seed);
  while (r.order.size() < m) {
    std::size_t best = cands.size();
    for (std::size_t i = 0; i < cands.size(); ++i)
      if (!taken[i] && (best == cands.size() || sep[i] > sep[best])) best = i;
    r.separations.push_back(sep[best]);
    pick(best);
  }
  return r;
}

inline ProxySet medial_proxy(const std::vector<ProxySphere>& cands, int dim, const FssConfig& cfg) {
  const FssResult f = furthest_sphere_sampling(cands, cfg.m_select, cfg.epsilon);
  ProxySet p{ProxyKind::Medial, dim, cfg.seed, {}};
  for (std::size_t i : f.order) p.spheres.push_back(cands[i]);
  return p;
}

/// n uniform interior points with their SDF radius.
inline ProxySet baseline_tangent(const DistanceField& field, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  ProxySet p{ProxyKind::Tangent, field.dim(), seed, {}};
  for (const Vec3& x : sample_interior(field, n, rng)) p.spheres.push_back({x, std::abs(field.phi(x))});
  return p;
}

/// grid_res nodes per axis spanning the bounds. Interior nodes get radius
/// min(half cell diagonal, |phi|) so every sphere stays inside the shape.
inline ProxySet baseline_uniform(const DistanceField& field, int grid_res) {
  if (grid_res < 2) throw Error(Errc::InvalidArgument, "grid_res must be >= 2");
  const int dim = field.dim();
  const Aabb b = field.bounds();
  Vec3 h = Vec3::Zero();
  for (int a = 0; a < dim; ++a) h[a] = (b.hi[a] - b.lo[a]) / (grid_res - 1);
  const double half_diag = 0.5 * h.norm();
  ProxySet p{ProxyKind::Uniform, dim, 0, {}};
  const int nz = dim == 3 ? grid_res : 1;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < grid_res; ++j)
      for (int i = 0; i < grid_res; ++i) {
        Vec3 x = b.lo + Vec3(i * h.x(), j * h.y(), k * h.z());
        if (dim == 2) x.z() = 0.0;
        const double phi = field.phi(x);
        if (phi < 0.0) p.spheres.push_back({x, std::min(half_diag, -phi)});
      }
  return p;
}

/// Baked SDF lattice with grid_res nodes per axis; costs grid_res^d floats.
inline GridField baseline_sdf_grid(const DistanceField& field, int grid_res) {
  return bake_grid(field, field.bounds(), {grid_res, grid_res, grid_res});
}

/// Mean |proxy SDF| over uniform ground-truth surface samples, in percent of
/// the scene diagonal.
template <class ProxyPhi>
double surface_mae_of(ProxyPhi&& proxy_phi, const AnalyticField& field, std::size_t n_samples, std::uint64_t seed) {
  SurfaceSampler sampler(field);
  Rng rng(seed);
  std::vector<Vec3> ys(n_samples);
  for (auto& y : ys) y = sampler.sample(rng).point;
  std::vector<double> err(n_samples);
  parallel_for(n_samples, [&](std::size_t i) { err[i] = std::abs(proxy_phi(ys[i])); });
  double sum = 0.0;
  for (double e : err) sum += e;
  return 100.0 * sum / n_samples / field.diagonal();
}

inline double surface_mae(const ProxySet& proxy, const AnalyticField& field, std::size_t n_samples, std::uint64_t seed) {
  if (proxy.spheres.empty()) throw Error(Errc::EmptyProxy, "proxy has no spheres");
  return surface_mae_of([&](const Vec3& y) { return proxy.phi(y); }, field, n_samples, seed);
}

inline double surface_mae(const GridField& grid, const AnalyticField& field, std::size_t n_samples, std::uint64_t seed) {
  if (grid.values.empty()) throw Error(Errc::EmptyProxy, "grid has no nodes");
  return surface_mae_of([&](const Vec3& y) { return grid.interpolate(y); }, field, n_samples, seed);
}

struct ParetoRow {
  ProxyKind kind;
  std::size_t budget;  // requested floats
  std::size_t floats;  // floats actually used
  double mae_percent;
};

struct ParetoConfig {
  std::size_t n_candidates = 4096;
  double epsilon = 0.0;  // FSS epsilon
  std::size_t n_surface_samples = 4096;
  std::uint64_t seed = 0;

  static ParetoConfig for_field(const DistanceField& field) {
    ParetoConfig c;
    c.epsilon = 0.05 * field.diagonal();
    return c;
  }
};

/// Largest uniform lattice whose kept sphere count fits in `max_spheres`.
inline ProxySet uniform_for_budget(const DistanceField& field, std::size_t max_spheres) {
  ProxySet best{ProxyKind::Uniform, field.dim(), 0, {}};
  const double cap = 8.0 * max_spheres + 64.0;
  for (int res = 2; std::pow(res, field.dim()) <= cap; ++res) {
    ProxySet p = baseline_uniform(field, res);
    if (!p.spheres.empty() && p.spheres.size() <= max_spheres) best = std::move(p);
  }
  return best;
}

/// Receives every proxy a report evaluates; exactly one pointer is set.
using ProxySink = std::function<void(std::size_t budget, const ProxySet* spheres, const GridField* grid)>;

/// One row per (kind, budget). Sphere kinds get floor(B/(d+1)) spheres, the
/// SDF grid gets floor(B^(1/d)) nodes per axis. Rows a representation cannot
/// fill (no uniform lattice fits, grid below 2 nodes) are omitted.
inline std::vector<ParetoRow> pareto_report(const AnalyticField& field, const MedialField& mf,
                                            const std::vector<std::size_t>& budgets, const ParetoConfig& cfg,
                                            const ProxySink& sink = {}) {
  const int dim = field.dim();
  const std::vector<ProxySphere> cands = sample_medial_candidates(field, mf, cfg.n_candidates, cfg.seed);
  std::vector<ParetoRow> rows;
  const std::uint64_t mae_seed = cfg.seed + 1;
  for (std::size_t budget : budgets) {
    const std::size_t m = budget / (dim + 1);
    if (m >= 1) {
      FssConfig fc{cfg.n_candidates, std::min(m, cands.size()), cfg.epsilon, cfg.seed};
      const ProxySet med = medial_proxy(cands, dim, fc);
      rows.push_back({ProxyKind::Medial, budget, med.memory_floats(), surface_mae(med, field, cfg.n_surface_samples, mae_seed)});
      if (sink) sink(budget, &med, nullptr);
      const ProxySet tan = baseline_tangent(field, m, cfg.seed + 2);
      rows.push_back({ProxyKind::Tangent, budget, tan.memory_floats(), surface_mae(tan, field, cfg.n_surface_samples, mae_seed)});
      if (sink) sink(budget, &tan, nullptr);
      const ProxySet uni = uniform_for_budget(field, m);
      if (!uni.spheres.empty()) {
        rows.push_back(
            {ProxyKind::Uniform, budget, uni.memory_floats(), surface_mae(uni, field, cfg.n_surface_samples, mae_seed)});
        if (sink) sink(budget, &uni, nullptr);
      }
    }
    const int res = static_cast<int>(std::floor(std::pow(static_cast<double>(budget), 1.0 / dim) + 1e-9));
    if (res >= 2) {
      const GridField g = baseline_sdf_grid(field, res);
      rows.push_back({ProxyKind::SdfGrid, budget, g.node_count(), surface_mae(g, field, cfg.n_surface_samples, mae_seed)});
      if (sink) sink(budget, nullptr, &g);
    }
  }
  return rows;
}

inline nlohmann::json proxy_to_json(const ProxySet& p) {
  nlohmann::json spheres = nlohmann::json::array();
  for (const auto& s : p.spheres) spheres.push_back({{"center", detail::vec_json(s.center, p.dim)}, {"radius", s.radius}});
  return {{"kind", proxy_kind_name(p.kind)}, {"d", p.dim}, {"seed", p.seed}, {"spheres", spheres}};
}

inline ProxySet proxy_from_json(const nlohmann::json& j) {
  try {
    ProxySet p;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "medial") p.kind = ProxyKind::Medial;
    else if (kind == "tangent") p.kind = ProxyKind::Tangent;
    else if (kind == "uniform") p.kind = ProxyKind::Uniform;
    else throw Error(Errc::InvalidArgument, "unknown proxy kind '" + kind + "'");
    p.dim = j.at("d").get<int>();
    p.seed = j.value("seed", std::uint64_t{0});
    for (const auto& s : j.at("spheres")) {
      const auto c = s.at("center").get<std::vector<double>>();
      if (c.size() != static_cast<std::size_t>(p.dim)) throw Error(Errc::InvalidArgument, "sphere center has wrong size");
      ProxySphere ps;
      for (int a = 0; a < p.dim; ++a) ps.center[a] = c[a];
      ps.radius = s.at("radius").get<double>();
      if (!(ps.radius > 0.0)) throw Error(Errc::InvalidArgument, "sphere radius must be > 0");
      p.spheres.push_back(ps);
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("malformed proxy JSON: ") + e.what());
  }
}

}  // namespace medial
