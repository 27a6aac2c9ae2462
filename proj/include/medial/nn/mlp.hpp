#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "medial/error.hpp"
#include "medial/vector.hpp"

/// Four-headed MLP over Fourier-encoded coordinates, evaluated in batches
/// with forward-mode jets so input gradients come out of the same GEMMs.
namespace medial::nn {

enum class Activation { Softplus, Identity };

enum Head : int { kPhi = 0, kMfPlus = 1, kMfMinus = 2, kGrad = 3 };
inline constexpr int kHeads = 4;

struct MlpConfig {
  int dim = 2;
  int bands = 64;
  /// Frequency std, in cycles per scene diagonal.
  double fourier_sigma = 4.0;
  double alpha = 1e-3;
  int width = 64;
  int backbone_layers = 6;
  int head_layers = 2;
  int head_width = 64;
  Activation activation = Activation::Softplus;
  double beta = 100.0;

  int input_dim() const { return dim + 2 * bands; }
  int head_out(int h) const { return h == kGrad ? dim : 1; }

  void validate() const {
    if (dim != 2 && dim != 3) throw Error(Errc::InvalidArgument, "network dim must be 2 or 3");
    if (bands < 0 || width < 1 || backbone_layers < 1 || head_layers < 0 || head_width < 1)
      throw Error(Errc::InvalidArgument, "bad network shape");
    if (!(beta > 0.0) || !(alpha >= 0.0)) throw Error(Errc::InvalidArgument, "bad activation or Fourier weighting");
  }
};

/// W (out x in, column-major) followed by b (out) inside the flat vector.
struct LayerSlot {
  std::size_t offset = 0;
  int in = 0;
  int out = 0;
  std::size_t size() const { return static_cast<std::size_t>(in + 1) * out; }
};

struct MlpParams {
  MlpConfig config;
  std::uint64_t seed = 0;
  Eigen::MatrixXd fourier;         // bands x dim, cycles per scene unit
  Eigen::VectorXd fourier_weight;  // bands
  std::vector<LayerSlot> backbone;
  std::array<std::vector<LayerSlot>, kHeads> heads;
  Eigen::VectorXd theta;  // every trainable parameter

  using CMap = Eigen::Map<const Eigen::MatrixXd>;
  using Map = Eigen::Map<Eigen::MatrixXd>;
  using CVMap = Eigen::Map<const Eigen::VectorXd>;
  using VMap = Eigen::Map<Eigen::VectorXd>;

  CMap W(const LayerSlot& s) const { return CMap(theta.data() + s.offset, s.out, s.in); }
  CVMap b(const LayerSlot& s) const { return CVMap(theta.data() + s.offset + std::size_t(s.in) * s.out, s.out); }
  Map W(const LayerSlot& s) { return Map(theta.data() + s.offset, s.out, s.in); }
  VMap b(const LayerSlot& s) { return VMap(theta.data() + s.offset + std::size_t(s.in) * s.out, s.out); }

  std::size_t num_params() const { return static_cast<std::size_t>(theta.size()); }
};

/// Allocates the layer layout with zero parameters.
inline MlpParams make_layout(const MlpConfig& cfg) {
  cfg.validate();
  MlpParams p;
  p.config = cfg;
  p.fourier = Eigen::MatrixXd::Zero(cfg.bands, cfg.dim);
  p.fourier_weight = Eigen::VectorXd::Zero(cfg.bands);
  std::size_t off = 0;
  auto add = [&](std::vector<LayerSlot>& v, int in, int out) {
    v.push_back({off, in, out});
    off += v.back().size();
  };
  add(p.backbone, cfg.input_dim(), cfg.width);
  for (int l = 1; l < cfg.backbone_layers; ++l) add(p.backbone, cfg.width, cfg.width);
  for (int h = 0; h < kHeads; ++h) {
    int in = cfg.width;
    for (int l = 0; l < cfg.head_layers; ++l) {
      add(p.heads[h], in, cfg.head_width);
      in = cfg.head_width;
    }
    add(p.heads[h], in, cfg.head_out(h));
  }
  p.theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(off));
  return p;
}

namespace detail {

struct ActivationFn {
  Activation kind;
  double beta;

  // Value, first and second derivative, elementwise.
  void eval(const Eigen::MatrixXd& z, Eigen::MatrixXd& a, Eigen::MatrixXd& d1, Eigen::MatrixXd* d2) const {
    if (kind == Activation::Identity) {
      a = z;
      d1 = Eigen::MatrixXd::Ones(z.rows(), z.cols());
      if (d2) *d2 = Eigen::MatrixXd::Zero(z.rows(), z.cols());
      return;
    }
    a.resize(z.rows(), z.cols());
    d1.resize(z.rows(), z.cols());
    if (d2) d2->resize(z.rows(), z.cols());
    const Eigen::Index n = z.size();
    const double* zp = z.data();
    double* ap = a.data();
    double* d1p = d1.data();
    double* d2p = d2 ? d2->data() : nullptr;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double bz = beta * zp[i];
      const double e = std::exp(-std::abs(bz));
      ap[i] = (std::max(bz, 0.0) + std::log1p(e)) / beta;
      const double s = bz >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
      d1p[i] = s;
      if (d2p) d2p[i] = beta * s * (1.0 - s);
    }
  }
};

}  // namespace detail

/// Cached activations of one batched jet evaluation. Row block 0 holds
/// values, row block k (1..m) holds d/dx_k of the same quantity.
struct Tape {
  int batch = 0;
  int m = 0;  // tangent directions: 0 or dim
  std::array<bool, kHeads> head_on{};
  std::array<int, kHeads> head_m{};
  Eigen::MatrixXd x;  // batch x dim
  Eigen::MatrixXd sin_t, cos_t;  // batch x bands
  struct Layer {
    Eigen::MatrixXd in;  // stacked input
    Eigen::MatrixXd z;   // stacked pre-activation
    Eigen::MatrixXd d1, d2;  // activation derivatives at the value rows
    bool activated = true;
  };
  std::vector<Layer> backbone;
  std::array<std::vector<Layer>, kHeads> heads;
  /// Stacked head outputs, (1 + head_m[h]) * batch rows.
  std::array<Eigen::MatrixXd, kHeads> out;

  double value(int h, int b, int c = 0) const { return out[h](b, c); }
  /// d head_h[c] / d x_k at batch row b.
  double tangent(int h, int k, int b, int c = 0) const { return out[h]((k + 1) * batch + b, c); }
};

namespace detail {

inline Eigen::MatrixXd encode_jet(const MlpParams& p, const Eigen::MatrixXd& x, int m, Tape& t) {
  const MlpConfig& c = p.config;
  const int B = static_cast<int>(x.rows()), d = c.dim, nb = c.bands;
  const double two_pi = 2.0 * std::numbers::pi;
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(1 + m) * B, c.input_dim());
  const Eigen::MatrixXd theta = two_pi * x * p.fourier.transpose();
  t.sin_t = theta.array().sin().matrix();
  t.cos_t = theta.array().cos().matrix();
  const auto w = p.fourier_weight.transpose().array();
  e.topLeftCorner(B, d) = x;
  e.block(0, d, B, nb) = (t.sin_t.array().rowwise() * w).matrix();
  e.block(0, d + nb, B, nb) = (t.cos_t.array().rowwise() * w).matrix();
  for (int k = 0; k < m; ++k) {
    const auto fk = (two_pi * p.fourier.col(k).transpose()).array() * w;
    e.block(static_cast<Eigen::Index>(k + 1) * B, k, B, 1).setOnes();
    e.block(static_cast<Eigen::Index>(k + 1) * B, d, B, nb) = (t.cos_t.array().rowwise() * fk).matrix();
    e.block(static_cast<Eigen::Index>(k + 1) * B, d + nb, B, nb) = -(t.sin_t.array().rowwise() * fk).matrix();
  }
  return e;
}

/// d loss / d x from the gradient of the stacked encoding.
inline Eigen::MatrixXd encode_jet_backward(const MlpParams& p, const Tape& t, const Eigen::MatrixXd& ge) {
  const MlpConfig& c = p.config;
  const int B = t.batch, d = c.dim, nb = c.bands;
  const double two_pi = 2.0 * std::numbers::pi;
  const auto w = p.fourier_weight.transpose().array();
  Eigen::MatrixXd gx = ge.topLeftCorner(B, d);
  const auto g0s = ge.block(0, d, B, nb).array();
  const auto g0c = ge.block(0, d + nb, B, nb).array();
  const Eigen::MatrixXd a = ((g0s * t.cos_t.array() - g0c * t.sin_t.array()).rowwise() * w).matrix();
  gx.noalias() += two_pi * a * p.fourier;
  if (t.m > 0) {
    Eigen::ArrayXXd acc = Eigen::ArrayXXd::Zero(B, nb);
    for (int k = 0; k < t.m; ++k) {
      const auto gks = ge.block(static_cast<Eigen::Index>(k + 1) * B, d, B, nb).array();
      const auto gkc = ge.block(static_cast<Eigen::Index>(k + 1) * B, d + nb, B, nb).array();
      acc += (gks * t.sin_t.array() + gkc * t.cos_t.array()).rowwise() * p.fourier.col(k).transpose().array();
    }
    gx.noalias() -= two_pi * two_pi * (acc.rowwise() * w).matrix() * p.fourier;
  }
  return gx;
}

inline Eigen::MatrixXd dense_forward(const MlpParams& p, const LayerSlot& s, const Eigen::MatrixXd& in, int B,
                                     bool activate, const ActivationFn& act, Tape::Layer& L, int m) {
  L.in = in;
  L.z.noalias() = in * p.W(s).transpose();
  L.z.topRows(B).rowwise() += p.b(s).transpose();
  L.activated = activate;
  if (!activate) return L.z;
  Eigen::MatrixXd a0;
  act.eval(L.z.topRows(B), a0, L.d1, m > 0 ? &L.d2 : nullptr);
  Eigen::MatrixXd a(L.z.rows(), L.z.cols());
  a.topRows(B) = a0;
  for (int k = 0; k < m; ++k) {
    const Eigen::Index r = static_cast<Eigen::Index>(k + 1) * B;
    a.middleRows(r, B) = L.d1.cwiseProduct(L.z.middleRows(r, B));
  }
  return a;
}

/// Propagates the stacked gradient `ga` of this layer's output back to its
/// input, accumulating parameter gradients into `g`.
inline Eigen::MatrixXd dense_backward(const MlpParams& p, const LayerSlot& s, const Tape::Layer& L, Eigen::MatrixXd ga,
                                      int B, int m, Eigen::VectorXd& g) {
  Eigen::MatrixXd& gz = ga;
  if (L.activated) {
    Eigen::MatrixXd g0 = ga.topRows(B).cwiseProduct(L.d1);
    for (int k = 0; k < m; ++k) {
      const Eigen::Index r = static_cast<Eigen::Index>(k + 1) * B;
      g0.array() += ga.middleRows(r, B).array() * L.d2.array() * L.z.middleRows(r, B).array();
      gz.middleRows(r, B) = ga.middleRows(r, B).cwiseProduct(L.d1);
    }
    gz.topRows(B) = g0;
  }
  MlpParams::Map gW(g.data() + s.offset, s.out, s.in);
  MlpParams::VMap gb(g.data() + s.offset + std::size_t(s.in) * s.out, s.out);
  gW.noalias() += gz.transpose() * L.in;
  gb += gz.topRows(B).colwise().sum().transpose();
  return gz * p.W(s);
}

}  // namespace detail

/// Batched forward pass. With `tangents` every enabled head also returns its
/// input derivatives, except the gradient head which never needs them.
inline Tape forward_batch(const MlpParams& p, const Eigen::MatrixXd& x, bool tangents,
                          std::array<bool, kHeads> heads = {true, true, true, true}) {
  const MlpConfig& c = p.config;
  if (x.cols() != c.dim) throw Error(Errc::InvalidArgument, "batch has wrong dimension");
  Tape t;
  t.batch = static_cast<int>(x.rows());
  t.m = tangents ? c.dim : 0;
  t.x = x;
  t.head_on = heads;
  const detail::ActivationFn act{c.activation, c.beta};
  Eigen::MatrixXd h = detail::encode_jet(p, x, t.m, t);
  t.backbone.resize(p.backbone.size());
  for (std::size_t l = 0; l < p.backbone.size(); ++l)
    h = detail::dense_forward(p, p.backbone[l], h, t.batch, true, act, t.backbone[l], t.m);
  for (int hd = 0; hd < kHeads; ++hd) {
    if (!heads[hd]) continue;
    const int mh = hd == kGrad ? 0 : t.m;
    t.head_m[hd] = mh;
    Eigen::MatrixXd a = mh == t.m ? h : Eigen::MatrixXd(h.topRows(t.batch));
    const auto& slots = p.heads[hd];
    t.heads[hd].resize(slots.size());
    for (std::size_t l = 0; l < slots.size(); ++l)
      a = detail::dense_forward(p, slots[l], a, t.batch, l + 1 < slots.size(), act, t.heads[hd][l], mh);
    t.out[hd] = std::move(a);
  }
  return t;
}

/// Reverse pass for a tape. `g_out[h]` matches `t.out[h]` in shape (empty for
/// heads that receive no gradient). Parameter gradients are added to `g`; the
/// gradient with respect to the batch positions is returned when `want_x`.
inline Eigen::MatrixXd backward_batch(const MlpParams& p, const Tape& t, const std::array<Eigen::MatrixXd, kHeads>& g_out,
                                      Eigen::VectorXd& g, bool want_x = false) {
  const int B = t.batch;
  const Eigen::Index rows = static_cast<Eigen::Index>(1 + t.m) * B;
  Eigen::MatrixXd gh = Eigen::MatrixXd::Zero(rows, p.config.width);
  for (int hd = 0; hd < kHeads; ++hd) {
    if (!t.head_on[hd] || g_out[hd].size() == 0) continue;
    const auto& slots = p.heads[hd];
    Eigen::MatrixXd ga = g_out[hd];
    for (std::size_t l = slots.size(); l-- > 0;) ga = detail::dense_backward(p, slots[l], t.heads[hd][l], std::move(ga), B, t.head_m[hd], g);
    gh.topRows(ga.rows()) += ga;
  }
  for (std::size_t l = p.backbone.size(); l-- > 0;) gh = detail::dense_backward(p, p.backbone[l], t.backbone[l], std::move(gh), B, t.m, g);
  if (!want_x) return {};
  return detail::encode_jet_backward(p, t, gh);
}

struct NetOutput {
  double phi = 0.0;
  double mf_plus = 0.0;
  double mf_minus = 0.0;
  Vec3 grad_head = Vec3::Zero();

  /// MF+ on the positive side of the network's own Phi, MF- elsewhere.
  double mf() const { return phi > 0.0 ? mf_plus : mf_minus; }
};

inline Eigen::MatrixXd point_row(const Vec3& x, int dim) {
  Eigen::MatrixXd r(1, dim);
  for (int a = 0; a < dim; ++a) r(0, a) = x[a];
  return r;
}

inline NetOutput forward(const MlpParams& p, const Vec3& x) {
  const Tape t = forward_batch(p, point_row(x, p.config.dim), false);
  NetOutput o;
  o.phi = t.value(kPhi, 0);
  o.mf_plus = t.value(kMfPlus, 0);
  o.mf_minus = t.value(kMfMinus, 0);
  for (int a = 0; a < p.config.dim; ++a) o.grad_head[a] = t.value(kGrad, 0, a);
  return o;
}

/// Exact d phi / dx from the forward-mode jets.
inline Vec3 input_gradient(const MlpParams& p, const Vec3& x) {
  const Tape t = forward_batch(p, point_row(x, p.config.dim), true, {true, false, false, false});
  Vec3 g = Vec3::Zero();
  for (int k = 0; k < p.config.dim; ++k) g[k] = t.tangent(kPhi, k, 0);
  return g;
}

/// w_i = alpha |f_i|, one weight per band.
inline Eigen::VectorXd fourier_weights(const Eigen::MatrixXd& f, double alpha) {
  return alpha * f.rowwise().norm();
}

namespace detail {

inline void init_dense(MlpParams& p, const LayerSlot& s, Rng& rng, double stddev) {
  std::normal_distribution<double> n(0.0, stddev);
  auto W = p.W(s);
  for (Eigen::Index j = 0; j < W.cols(); ++j)
    for (Eigen::Index i = 0; i < W.rows(); ++i) W(i, j) = n(rng);
  p.b(s).setZero();
}

}  // namespace detail

/// Random Fourier bands weighted by alpha |f_i|, He-normal hidden layers and
/// a Phi head whose output layer is least-squares fit to |x - center| - r0.
/// Fitting the last layer gives the spherical starting shape directly instead
/// of relying on the mean-field ReLU argument behind the usual constants.
inline MlpParams init_network(const MlpConfig& cfg, std::uint64_t seed, const Aabb& bounds) {
  MlpParams p = make_layout(cfg);
  p.seed = seed;
  Rng rng(seed);
  const double diag = bounds.diagonal();
  if (!(diag > 0.0) || !std::isfinite(diag)) throw Error(Errc::BoundsDegenerate, "network init needs finite bounds");
  std::normal_distribution<double> freq(0.0, cfg.fourier_sigma / diag);
  for (int i = 0; i < cfg.bands; ++i)
    for (int a = 0; a < cfg.dim; ++a) p.fourier(i, a) = freq(rng);
  p.fourier_weight = fourier_weights(p.fourier, cfg.alpha);
  for (const auto& s : p.backbone) detail::init_dense(p, s, rng, std::sqrt(2.0 / s.out));
  for (int h = 0; h < kHeads; ++h) {
    const auto& slots = p.heads[h];
    for (std::size_t l = 0; l + 1 < slots.size(); ++l) detail::init_dense(p, slots[l], rng, std::sqrt(2.0 / slots[l].out));
    detail::init_dense(p, slots.back(), rng, std::sqrt(1.0 / slots.back().in));
  }

  const Vec3 center = bounds.center();
  const double r0 = 0.5 * diag;
  const int n_fit = 2048;
  Eigen::MatrixXd x(n_fit, cfg.dim);
  Eigen::VectorXd y(n_fit);
  std::uniform_real_distribution<double> u(-diag, diag);
  for (int i = 0; i < n_fit; ++i) {
    Vec3 q = Vec3::Zero();
    for (int a = 0; a < cfg.dim; ++a) q[a] = center[a] + u(rng);
    x.row(i) = point_row(q, cfg.dim);
    y[i] = (q - center).norm() - r0;
  }
  // Features feeding the Phi output layer.
  const LayerSlot last = p.heads[kPhi].back();
  p.W(last).setZero();
  p.b(last).setZero();
  const Tape t = forward_batch(p, x, false, {true, false, false, false});
  const Eigen::MatrixXd& feat = t.heads[kPhi].back().in;
  Eigen::MatrixXd A(n_fit, last.in + 1);
  A.leftCols(last.in) = feat;
  A.col(last.in).setOnes();
  Eigen::MatrixXd gram = A.transpose() * A;
  gram.diagonal().head(last.in).array() += 1e-6 * n_fit;
  const Eigen::VectorXd sol = gram.ldlt().solve(A.transpose() * y);
  p.W(last).row(0) = sol.head(last.in).transpose();
  p.b(last)[0] = sol[last.in];
  return p;
}

}  // namespace medial::nn
