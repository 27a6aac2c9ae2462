#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "medial/field.hpp"
#include "medial/medial_field.hpp"
#include "medial/nn/mlp.hpp"
#include "medial/shapes.hpp"

namespace medial::nn {

enum Term : int {
  kSurface = 0,
  kNormal,
  kMaximal,
  kInscribed,
  kOrthogonal,
  kEikonal,
  kMinSurface,
  kCurvature,
  kGradient,
};
inline constexpr int kTerms = 9;

inline constexpr std::array<const char*, kTerms> kTermNames{
    "surface", "normal", "maximal", "inscribed", "orthogonal", "eikonal", "minsurface", "curvature", "gradient"};

inline bool is_medial_term(int t) { return t == kMaximal || t == kInscribed || t == kOrthogonal; }

struct LossWeights {
  double surface = 1e4;
  double normal = 10.0;
  double maximal = 1e2;
  double inscribed = 5e2;
  double orthogonal = 3e-2;
  double eikonal = 1.0;
  double minsurface = 1.0;
  /// Curvature weight is 10^-(start + (end - start) t), t = training progress.
  double curvature_start = 1.0;
  double curvature_end = 5.0;
  double gradient = 1.0;

  double curvature_at(double t) const { return std::pow(10.0, -(curvature_start + (curvature_end - curvature_start) * t)); }

  std::array<double, kTerms> at(double t) const {
    return {surface, normal, maximal, inscribed, orthogonal, eikonal, minsurface, curvature_at(t), gradient};
  }

  void validate() const {
    for (double w : at(0.0))
      if (!(w >= 0.0)) throw Error(Errc::InvalidArgument, "loss weights must be >= 0");
  }
};

struct TrainConfig {
  MlpConfig net;
  LossWeights weights;
  /// Surface samples per step; the volume set has the same size.
  int batch_size = 128;
  double lr = 1e-3;
  int steps = 20000;
  /// Std of the volume offsets as a fraction of the scene diagonal.
  double sigma_volume = 0.5;
  /// Finite step of the curvature estimator as a fraction of the diagonal.
  double curvature_step = 1e-3;
  std::uint64_t seed = 0;
  /// Drop the maximal, inscribed and orthogonal terms.
  bool ablate_medial = false;
  /// The returned weights are an exponential moving average of the iterates
  /// with this decay; 0 returns the last iterate.
  double ema_decay = 0.999;

  void validate() const {
    net.validate();
    weights.validate();
    if (batch_size < 1) throw Error(Errc::InvalidArgument, "batch_size must be >= 1");
    if (!(lr > 0.0) || steps < 0 || !(sigma_volume > 0.0) || !(curvature_step > 0.0))
      throw Error(Errc::InvalidArgument, "bad training configuration");
    if (!(ema_decay >= 0.0 && ema_decay < 1.0)) throw Error(Errc::InvalidArgument, "ema_decay must be in [0,1)");
  }
};

struct SampleBatch {
  Eigen::MatrixXd surface_points;   // n x d
  Eigen::MatrixXd surface_normals;  // n x d, ground-truth gradient
  Eigen::MatrixXd volume_points;    // m x d
};

/// Uniform surface samples; volume samples are the same points moved by
/// isotropic Gaussian offsets with std sigma_frac * diag.
inline SampleBatch sample_batch(const SurfaceSampler& sampler, int dim, double diag, int n, double sigma_frac, Rng& rng) {
  SampleBatch b;
  b.surface_points.resize(n, dim);
  b.surface_normals.resize(n, dim);
  b.volume_points.resize(n, dim);
  std::normal_distribution<double> g(0.0, sigma_frac * diag);
  for (int i = 0; i < n; ++i) {
    const SurfacePoint s = sampler.sample(rng);
    for (int a = 0; a < dim; ++a) {
      b.surface_points(i, a) = s.point[a];
      b.surface_normals(i, a) = s.normal[a];
    }
  }
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < dim; ++a) b.volume_points(i, a) = b.surface_points(i, a) + g(rng);
  return b;
}

/// Per-point estimators. Each returns the summand whose batch mean is the term.
namespace estimator {

inline double surface(double phi) { return phi * phi; }
inline double normal(const Vec3& grad_phi, const Vec3& grad_gt) { return (grad_phi - grad_gt).squaredNorm(); }
inline double maximal(double abs_phi_gt, double mf) {
  const double v = std::max(abs_phi_gt - mf, 0.0);
  return v * v;
}
/// `abs_phi_at_projection` is |Phi_GT(x + s n (MF - |Phi_GT(x)|))|.
inline double inscribed(double abs_phi_at_projection, double mf) {
  const double e = abs_phi_at_projection - mf;
  return e * e;
}
inline double orthogonal(const Vec3& grad_mf, const Vec3& grad_gt) {
  const double v = grad_mf.dot(grad_gt);
  return v * v;
}
inline double eikonal(const Vec3& grad_phi) {
  const double e = grad_phi.norm() - 1.0;
  return e * e;
}
inline double minsurface(double phi) { return std::exp(-100.0 * std::abs(phi)); }
/// L1 norm of the forward difference of grad Phi along grad Phi.
inline double curvature(const Vec3& grad_phi, const Vec3& grad_phi_shifted, double h) {
  return ((grad_phi_shifted - grad_phi) / h).lpNorm<1>();
}
inline double gradient(const Vec3& grad_head, const Vec3& grad_phi) { return (grad_head - grad_phi).squaredNorm(); }

}  // namespace estimator

struct LossResult {
  std::array<double, kTerms> terms{};
  std::array<double, kTerms> weights{};
  double total = 0.0;
};

namespace detail {

inline Vec3 row_vec(const Eigen::MatrixXd& m, Eigen::Index i) {
  Vec3 v = Vec3::Zero();
  for (Eigen::Index a = 0; a < m.cols(); ++a) v[a] = m(i, a);
  return v;
}

inline double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace detail

/// Evaluates every term on one batch and, when `grad` is given, writes the
/// exact parameter gradient of the weighted total. Terms are batch means.
///
/// The medial terms take Phi and its gradient from the ground truth and MF
/// from the network head picked by the sign of the network's own Phi. The
/// inscribed target |Phi(P)| is differentiated through P = x + s n (MF - |Phi|).
/// Curvature is the L1 norm of (grad phi(x + h g) - g) / h with g the network
/// gradient at x, differentiated through the shifted point as well.
inline LossResult compute_losses(const MlpParams& p, const DistanceField& gt, const SampleBatch& batch,
                                 const TrainConfig& cfg, double progress, Eigen::VectorXd* grad) {
  const int d = p.config.dim;
  const int ns = static_cast<int>(batch.surface_points.rows());
  const int nv = static_cast<int>(batch.volume_points.rows());
  if (ns == 0 || nv == 0) throw Error(Errc::EmptyBatch, "surface and volume sets must be non-empty");
  LossResult r;
  r.weights = cfg.weights.at(progress);
  if (cfg.ablate_medial)
    for (int t = 0; t < kTerms; ++t)
      if (is_medial_term(t)) r.weights[t] = 0.0;
  const auto& w = r.weights;
  const bool medial = !cfg.ablate_medial;
  if (grad) grad->setZero(static_cast<Eigen::Index>(p.num_params()));

  // Surface set: Phi and its input gradient.
  {
    const Tape t = forward_batch(p, batch.surface_points, true, {true, false, false, false});
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(t.out[kPhi].rows(), 1);
    double ls = 0.0, ln = 0.0;
    for (int i = 0; i < ns; ++i) {
      const double phi = t.value(kPhi, i);
      Vec3 gphi = Vec3::Zero();
      for (int k = 0; k < d; ++k) gphi[k] = t.tangent(kPhi, k, i);
      const Vec3 n = detail::row_vec(batch.surface_normals, i);
      ls += estimator::surface(phi);
      ln += estimator::normal(gphi, n);
      g(i, 0) = w[kSurface] * 2.0 * phi / ns;
      for (int k = 0; k < d; ++k) g((k + 1) * ns + i, 0) = w[kNormal] * 2.0 * (gphi[k] - n[k]) / ns;
    }
    r.terms[kSurface] = ls / ns;
    r.terms[kNormal] = ln / ns;
    if (grad) backward_batch(p, t, {g, {}, {}, {}}, *grad);
  }

  // Volume set.
  const Tape t = forward_batch(p, batch.volume_points, true, {true, medial, medial, true});
  std::array<Eigen::MatrixXd, kHeads> g;
  for (int h = 0; h < kHeads; ++h)
    if (t.head_on[h]) g[h] = Eigen::MatrixXd::Zero(t.out[h].rows(), t.out[h].cols());
  auto tan_row = [&](const Tape& tp, int head, int i) {
    Vec3 v = Vec3::Zero();
    for (int k = 0; k < d; ++k) v[k] = tp.tangent(head, k, i);
    return v;
  };

  const double h_step = cfg.curvature_step * gt.diagonal();
  Eigen::MatrixXd shifted(nv, d);
  for (int i = 0; i < nv; ++i)
    for (int k = 0; k < d; ++k) shifted(i, k) = batch.volume_points(i, k) + h_step * t.tangent(kPhi, k, i);
  const Tape tc = forward_batch(p, shifted, true, {true, false, false, false});
  Eigen::MatrixXd gc = Eigen::MatrixXd::Zero(tc.out[kPhi].rows(), 1);

  std::array<double, kTerms> sum{};
  for (int i = 0; i < nv; ++i) {
    const double phi = t.value(kPhi, i);
    const Vec3 gphi = tan_row(t, kPhi, i);
    const double len = gphi.norm();
    auto gphi_k = [&](int k) -> double& { return g[kPhi]((k + 1) * nv + i, 0); };

    sum[kEikonal] += estimator::eikonal(gphi);
    if (len > 0.0)
      for (int k = 0; k < d; ++k) gphi_k(k) += w[kEikonal] * 2.0 * (len - 1.0) * gphi[k] / len / nv;

    const double ms = estimator::minsurface(phi);
    sum[kMinSurface] += ms;
    g[kPhi](i, 0) += w[kMinSurface] * -100.0 * detail::sgn(phi) * ms / nv;

    Vec3 ghead = Vec3::Zero();
    for (int k = 0; k < d; ++k) ghead[k] = t.value(kGrad, i, k);
    sum[kGradient] += estimator::gradient(ghead, gphi);
    for (int k = 0; k < d; ++k) {
      const double e = 2.0 * (ghead[k] - gphi[k]) * w[kGradient] / nv;
      g[kGrad](i, k) += e;
      gphi_k(k) -= e;
    }

    const Vec3 gshift = tan_row(tc, kPhi, i);
    sum[kCurvature] += estimator::curvature(gphi, gshift, h_step);
    for (int k = 0; k < d; ++k) {
      const double gcv = w[kCurvature] * detail::sgn(gshift[k] - gphi[k]) / (h_step * nv);
      gc((k + 1) * nv + i, 0) += gcv;
      gphi_k(k) -= gcv;
    }

    if (!medial) continue;
    const int mh = phi > 0.0 ? kMfPlus : kMfMinus;
    const double mf = t.value(mh, i);
    const Vec3 x = detail::row_vec(batch.volume_points, i);
    const FieldSample s = gt.sample(x);
    const double a = std::abs(s.phi);

    sum[kMaximal] += estimator::maximal(a, mf);
    g[mh](i, 0) += w[kMaximal] * -2.0 * std::max(a - mf, 0.0) / nv;

    // Both remaining terms need the spoke direction.
    if (!s.grad) continue;
    const Vec3 n = *s.grad;
    const double sg = side_sign(s.phi);
    const FieldSample sp = gt.sample(x + sg * n * (mf - a));
    const double tau = std::abs(sp.phi);
    const double dtau = sp.grad ? detail::sgn(sp.phi) * sp.grad->dot(sg * n) : 0.0;
    sum[kInscribed] += estimator::inscribed(tau, mf);
    g[mh](i, 0) += w[kInscribed] * 2.0 * (tau - mf) * (dtau - 1.0) / nv;

    const Vec3 gmf = tan_row(t, mh, i);
    sum[kOrthogonal] += estimator::orthogonal(gmf, n);
    const double dot = gmf.dot(n);
    for (int k = 0; k < d; ++k) g[mh]((k + 1) * nv + i, 0) += w[kOrthogonal] * 2.0 * dot * n[k] / nv;
  }
  for (int term : {kMaximal, kInscribed, kOrthogonal, kEikonal, kMinSurface, kCurvature, kGradient})
    r.terms[term] = sum[term] / nv;
  for (int k = 0; k < kTerms; ++k) r.total += w[k] * r.terms[k];

  if (grad) {
    // The shifted point depends on the parameters through g.
    const Eigen::MatrixXd gx = backward_batch(p, tc, {gc, {}, {}, {}}, *grad, true);
    for (int i = 0; i < nv; ++i)
      for (int k = 0; k < d; ++k) g[kPhi]((k + 1) * nv + i, 0) += h_step * gx(i, k);
    backward_batch(p, t, g, *grad);
  }
  return r;
}

struct MedialResiduals {
  double maximal = 0.0;
  double inscribed = 0.0;
  double orthogonal = 0.0;
  double total() const { return maximal + inscribed + orthogonal; }
};

/// The three medial terms of the network MF on a fixed set of points.
inline MedialResiduals medial_residuals(const MlpParams& p, const DistanceField& gt, const Eigen::MatrixXd& points) {
  SampleBatch b;
  b.surface_points = points.topRows(1);
  b.surface_normals = Eigen::MatrixXd::Zero(1, points.cols());
  b.volume_points = points;
  TrainConfig cfg;
  cfg.net = p.config;
  const LossResult r = compute_losses(p, gt, b, cfg, 0.0, nullptr);
  return {r.terms[kMaximal], r.terms[kInscribed], r.terms[kOrthogonal]};
}

}  // namespace medial::nn
