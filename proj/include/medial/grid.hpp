#pragma once

#include <array>
#include <bit>
#include <cstring>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "medial/error.hpp"
#include "medial/field.hpp"
#include "medial/parallel.hpp"
#include "medial/vector.hpp"

namespace medial {

/// Scalar samples on a regular lattice with isotropic spacing. Node (i,j,k)
/// sits at origin + cell_size * (i,j,k) and is stored x-fastest.
struct GridField {
  int dim = 2;
  Vec3 origin = Vec3::Zero();
  double cell_size = 1.0;
  std::array<int, 3> resolution{2, 2, 1};
  std::vector<double> values;
  std::optional<Side> side;

  std::size_t node_count() const {
    return static_cast<std::size_t>(resolution[0]) * resolution[1] * resolution[2];
  }
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(resolution[0]) * (j + static_cast<std::size_t>(resolution[1]) * k);
  }
  Vec3 node_position(int i, int j, int k) const { return origin + cell_size * Vec3(i, j, k); }
  double at(int i, int j, int k = 0) const { return values[index(i, j, k)]; }

  Aabb box() const {
    Vec3 hi = origin;
    for (int a = 0; a < dim; ++a) hi[a] += cell_size * (resolution[a] - 1);
    return {origin, hi};
  }

  /// Multilinear interpolation; queries outside the lattice are clamped to it.
  double interpolate(const Vec3& x) const {
    std::array<int, 3> i0{0, 0, 0};
    std::array<double, 3> f{0, 0, 0};
    for (int a = 0; a < dim; ++a) {
      const double u = std::clamp((x[a] - origin[a]) / cell_size, 0.0, double(resolution[a] - 1));
      int c = static_cast<int>(std::floor(u));
      c = std::min(c, resolution[a] - 2);
      i0[a] = c;
      f[a] = u - c;
    }
    double acc = 0.0;
    const int corners = 1 << dim;
    for (int m = 0; m < corners; ++m) {
      double w = 1.0;
      std::array<int, 3> n{0, 0, 0};
      for (int a = 0; a < dim; ++a) {
        const int bit = (m >> a) & 1;
        n[a] = i0[a] + bit;
        w *= bit ? f[a] : 1.0 - f[a];
      }
      if (w != 0.0) acc += w * at(n[0], n[1], n[2]);
    }
    return acc;
  }
};

inline void validate_resolution(const std::array<int, 3>& res, int dim) {
  for (int a = 0; a < dim; ++a)
    if (res[a] < 2) throw Error(Errc::InvalidArgument, "grid resolution must be >= 2 per axis");
}

/// Lattice layout covering `bounds`: spacing is the largest per-axis step, so
/// shorter axes are covered with some overhang past `hi`.
inline GridField make_lattice(const Aabb& bounds, std::array<int, 3> res, int dim) {
  validate_resolution(res, dim);
  for (int a = 0; a < dim; ++a)
    if (!(bounds.hi[a] - bounds.lo[a] > 0.0) || !std::isfinite(bounds.hi[a] - bounds.lo[a]))
      throw Error(Errc::BoundsDegenerate, "bake bounds need positive finite extent");
  if (dim == 2) res[2] = 1;
  GridField g;
  g.dim = dim;
  g.origin = bounds.lo;
  if (dim == 2) g.origin.z() = 0.0;
  g.resolution = res;
  double cell = 0.0;
  for (int a = 0; a < dim; ++a) cell = std::max(cell, (bounds.hi[a] - bounds.lo[a]) / (res[a] - 1));
  g.cell_size = cell;
  g.values.assign(g.node_count(), 0.0);
  return g;
}

/// Fills every node with fn(node_position). Nodes are independent, so the
/// parallel loop yields the same bytes as a serial one.
template <class Fn>
void fill_lattice(GridField& g, Fn&& fn) {
  const int nx = g.resolution[0], ny = g.resolution[1];
  parallel_for(g.node_count(), [&](std::size_t idx) {
    const int i = static_cast<int>(idx % nx);
    const int j = static_cast<int>((idx / nx) % ny);
    const int k = static_cast<int>(idx / (static_cast<std::size_t>(nx) * ny));
    g.values[idx] = fn(g.node_position(i, j, k));
  });
}

inline GridField bake_grid(const DistanceField& field, const Aabb& bounds, std::array<int, 3> res) {
  GridField g = make_lattice(bounds, res, field.dim());
  fill_lattice(g, [&](const Vec3& p) { return field.phi(p); });
  return g;
}

/// Grid-backed distance field. Gradients use central differences with half a
/// cell; outside the lattice the clamped value plus the distance to the
/// lattice box keeps the field an upper bound for tracing.
class GridDistanceField final : public DistanceField {
 public:
  explicit GridDistanceField(GridField grid) : grid_(std::move(grid)), box_(grid_.box()) {}

  int dim() const override { return grid_.dim; }
  Aabb bounds() const override { return box_; }
  double fd_step() const override { return 0.5 * grid_.cell_size; }

  double phi(const Vec3& x) const override {
    const Vec3 clamped = x.cwiseMax(box_.lo).cwiseMin(box_.hi);
    return grid_.interpolate(x) + (x - clamped).norm();
  }

  const GridField& grid() const { return grid_; }

 private:
  GridField grid_;
  Aabb box_;
};

namespace detail {

inline nlohmann::json vec_json(const Vec3& v, int dim) {
  nlohmann::json a = nlohmann::json::array();
  for (int k = 0; k < dim; ++k) a.push_back(v[k]);
  return a;
}

inline void put_le_doubles(std::ostream& os, const double* data, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      auto bits = std::bit_cast<std::uint64_t>(data[i]);
      char bytes[8];
      for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xff);
      os.write(bytes, 8);
    }
  }
}

inline void get_le_doubles(std::istream& is, double* data, std::size_t n) {
  std::vector<unsigned char> raw(n * 8);
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(is.gcount()) != raw.size()) throw Error(Errc::Io, "truncated binary payload");
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(raw[i * 8 + b]) << (8 * b);
    data[i] = std::bit_cast<double>(bits);
  }
}

}  // namespace detail

/// One JSON header line, a newline, then little-endian float64 node values.
/// Extra keys (manifest, r_max, ...) are merged into the header.
inline void write_grid(std::ostream& os, const GridField& g, const nlohmann::json& extra = nlohmann::json::object()) {
  nlohmann::json h = extra.is_object() ? extra : nlohmann::json::object();
  h["format"] = "medialfield-grid";
  h["dim"] = g.dim;
  h["origin"] = detail::vec_json(g.origin, g.dim);
  h["cell_size"] = g.cell_size;
  h["resolution"] = std::vector<int>(g.resolution.begin(), g.resolution.begin() + g.dim);
  h["side"] = g.side ? nlohmann::json(side_name(*g.side)) : nlohmann::json(nullptr);
  os << h.dump() << '\n';
  detail::put_le_doubles(os, g.values.data(), g.values.size());
}

inline GridField read_grid(std::istream& is, nlohmann::json* header_out = nullptr) {
  std::string line;
  if (!std::getline(is, line)) throw Error(Errc::Io, "missing grid header");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Io, std::string("bad grid header: ") + e.what());
  }
  GridField g;
  try {
    g.dim = h.at("dim").get<int>();
    if (g.dim != 2 && g.dim != 3) throw Error(Errc::Io, "grid dim must be 2 or 3");
    const auto o = h.at("origin").get<std::vector<double>>();
    const auto r = h.at("resolution").get<std::vector<int>>();
    if (o.size() != static_cast<std::size_t>(g.dim) || r.size() != static_cast<std::size_t>(g.dim))
      throw Error(Errc::Io, "grid header vectors must have dim entries");
    g.origin = Vec3::Zero();
    g.resolution = {1, 1, 1};
    for (int a = 0; a < g.dim; ++a) {
      g.origin[a] = o[a];
      g.resolution[a] = r[a];
    }
    validate_resolution(g.resolution, g.dim);
    g.cell_size = h.at("cell_size").get<double>();
    if (h.contains("side") && h["side"].is_string())
      g.side = h["side"].get<std::string>() == "interior" ? Side::Interior : Side::Exterior;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Io, std::string("bad grid header: ") + e.what());
  }
  g.values.resize(g.node_count());
  detail::get_le_doubles(is, g.values.data(), g.values.size());
  if (header_out) *header_out = h;
  return g;
}

}  // namespace medial
