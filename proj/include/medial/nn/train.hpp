#pragma once

#include <cmath>
#include <functional>
#include <istream>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "medial/grid.hpp"
#include "medial/nn/losses.hpp"

namespace medial::nn {

/// Adam with the usual defaults (beta1 0.9, beta2 0.999, eps 1e-8).
class Adam {
 public:
  Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps), m_(Eigen::VectorXd::Zero(n)), v_(Eigen::VectorXd::Zero(n)) {}

  void step(Eigen::VectorXd& theta, const Eigen::VectorXd& g) {
    ++t_;
    m_ = b1_ * m_ + (1.0 - b1_) * g;
    v_ = b2_ * v_ + (1.0 - b2_) * g.cwiseProduct(g);
    const double c1 = 1.0 - std::pow(b1_, t_), c2 = 1.0 - std::pow(b2_, t_);
    theta.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
  }

  long steps() const { return t_; }

 private:
  double lr_, b1_, b2_, eps_;
  long t_ = 0;
  Eigen::VectorXd m_, v_;
};

struct StepLog {
  int step = 0;
  LossResult loss;
};

inline void write_loss_header(std::ostream& os) {
  os << "step";
  for (const char* n : kTermNames) os << ',' << n;
  os << ",total\n";
}

inline void write_loss_row(std::ostream& os, const StepLog& s) {
  os << s.step;
  char buf[32];
  for (double v : s.loss.terms) {
    std::snprintf(buf, sizeof buf, ",%.9g", v);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, ",%.9g", s.loss.total);
  os << buf << '\n';
}

/// Trains a network on an analytic scene. Deterministic for a fixed config:
/// one RNG stream drives init and sampling, and every reduction runs in a
/// fixed order. `on_step` sees every step's losses (of the raw iterate)
/// before the update. Returns the moving average of the iterates.
inline MlpParams train(const AnalyticField& gt, const TrainConfig& cfg,
                       const std::function<void(const StepLog&)>& on_step = {}) {
  TrainConfig c = cfg;
  c.net.dim = gt.dim();
  c.validate();
  const Aabb bounds = gt.bounds();
  MlpParams p = init_network(c.net, c.seed, bounds);
  const SurfaceSampler sampler(gt);
  Rng rng(c.seed ^ 0x9e3779b97f4a7c15ULL);
  Adam opt(p.num_params(), c.lr);
  Eigen::VectorXd g;
  Eigen::VectorXd avg = p.theta;
  for (int step = 0; step < c.steps; ++step) {
    const double progress = c.steps > 1 ? static_cast<double>(step) / (c.steps - 1) : 0.0;
    const SampleBatch batch = sample_batch(sampler, c.net.dim, gt.diagonal(), c.batch_size, c.sigma_volume, rng);
    const LossResult r = compute_losses(p, gt, batch, c, progress, &g);
    if (!std::isfinite(r.total) || !g.allFinite())
      throw Error(Errc::DivergedLoss, "loss became non-finite at step " + std::to_string(step));
    if (on_step) on_step({step, r});
    opt.step(p.theta, g);
    avg = c.ema_decay * avg + (1.0 - c.ema_decay) * p.theta;
  }
  p.theta = avg;
  return p;
}

// Checkpoint: one JSON header line, then theta, the Fourier matrix and the
// Fourier weights as little-endian doubles.

inline nlohmann::json mlp_config_json(const MlpConfig& c) {
  return {{"dim", c.dim},
          {"bands", c.bands},
          {"fourier_sigma", c.fourier_sigma},
          {"alpha", c.alpha},
          {"width", c.width},
          {"backbone_layers", c.backbone_layers},
          {"head_layers", c.head_layers},
          {"head_width", c.head_width},
          {"activation", c.activation == Activation::Softplus ? "softplus" : "identity"},
          {"beta", c.beta}};
}

inline MlpConfig mlp_config_from_json(const nlohmann::json& j) {
  MlpConfig c;
  c.dim = j.at("dim");
  c.bands = j.at("bands");
  c.fourier_sigma = j.at("fourier_sigma");
  c.alpha = j.at("alpha");
  c.width = j.at("width");
  c.backbone_layers = j.at("backbone_layers");
  c.head_layers = j.at("head_layers");
  c.head_width = j.at("head_width");
  const std::string act = j.at("activation");
  if (act == "softplus") c.activation = Activation::Softplus;
  else if (act == "identity") c.activation = Activation::Identity;
  else throw Error(Errc::InvalidCheckpoint, "unknown activation '" + act + "'");
  c.beta = j.at("beta");
  return c;
}

struct Checkpoint {
  MlpParams params;
  Aabb bounds;
  nlohmann::json extra = nlohmann::json::object();
};

inline void write_checkpoint(std::ostream& os, const Checkpoint& ck) {
  const MlpParams& p = ck.params;
  const int d = p.config.dim;
  nlohmann::json h = {{"format", "medialfield-mlp"},
                      {"version", 1},
                      {"architecture", mlp_config_json(p.config)},
                      {"seed", p.seed},
                      {"bounds", {{"lo", medial::detail::vec_json(ck.bounds.lo, d)}, {"hi", medial::detail::vec_json(ck.bounds.hi, d)}}},
                      {"num_params", p.num_params()},
                      {"extra", ck.extra}};
  os << h.dump() << '\n';
  medial::detail::put_le_doubles(os, p.theta.data(), p.num_params());
  const Eigen::MatrixXd f = p.fourier;  // column-major
  medial::detail::put_le_doubles(os, f.data(), static_cast<std::size_t>(f.size()));
  medial::detail::put_le_doubles(os, p.fourier_weight.data(), static_cast<std::size_t>(p.fourier_weight.size()));
  if (!os) throw Error(Errc::Io, "failed writing checkpoint");
}

inline Checkpoint read_checkpoint(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(Errc::InvalidCheckpoint, "missing header");
  Checkpoint ck;
  try {
    const nlohmann::json h = nlohmann::json::parse(line);
    if (h.at("format") != "medialfield-mlp") throw Error(Errc::InvalidCheckpoint, "not a network checkpoint");
    ck.params = make_layout(mlp_config_from_json(h.at("architecture")));
    ck.params.seed = h.at("seed");
    const int d = ck.params.config.dim;
    const auto lo = h.at("bounds").at("lo").get<std::vector<double>>();
    const auto hi = h.at("bounds").at("hi").get<std::vector<double>>();
    if (lo.size() != std::size_t(d) || hi.size() != std::size_t(d)) throw Error(Errc::InvalidCheckpoint, "bad bounds");
    ck.bounds = {Vec3::Zero(), Vec3::Zero()};
    for (int a = 0; a < d; ++a) {
      ck.bounds.lo[a] = lo[a];
      ck.bounds.hi[a] = hi[a];
    }
    if (h.at("num_params").get<std::size_t>() != ck.params.num_params())
      throw Error(Errc::InvalidCheckpoint, "parameter count does not match architecture");
    ck.extra = h.value("extra", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidCheckpoint, std::string("malformed header: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::InvalidCheckpoint) throw;
    throw Error(Errc::InvalidCheckpoint, e.what());
  }
  MlpParams& p = ck.params;
  try {
    medial::detail::get_le_doubles(is, p.theta.data(), p.num_params());
    medial::detail::get_le_doubles(is, p.fourier.data(), static_cast<std::size_t>(p.fourier.size()));
    medial::detail::get_le_doubles(is, p.fourier_weight.data(), static_cast<std::size_t>(p.fourier_weight.size()));
  } catch (const Error& e) {
    throw Error(Errc::InvalidCheckpoint, e.what());
  }
  if (!p.theta.allFinite() || !p.fourier.allFinite()) throw Error(Errc::InvalidCheckpoint, "non-finite parameters");
  return ck;
}

/// The Phi head as a distance field. Gradients come from the gradient head,
/// renormalized, with the exact input gradient as fallback when the head
/// output is degenerate.
class NeuralDistanceField final : public DistanceField {
 public:
  NeuralDistanceField(MlpParams params, const Aabb& bounds) : p_(std::move(params)), bounds_(bounds) {}

  int dim() const override { return p_.config.dim; }
  Aabb bounds() const override { return bounds_; }
  double phi(const Vec3& x) const override {
    return forward_batch(p_, point_row(x, dim()), false, {true, false, false, false}).value(kPhi, 0);
  }
  Vec3 raw_gradient(const Vec3& x) const override { return sample(x).grad.value_or(Vec3::Zero()); }
  FieldSample sample(const Vec3& x) const override {
    const Tape t = forward_batch(p_, point_row(x, dim()), false, {true, false, false, true});
    FieldSample s;
    s.phi = t.value(kPhi, 0);
    Vec3 g = Vec3::Zero();
    for (int a = 0; a < dim(); ++a) g[a] = t.value(kGrad, 0, a);
    if (!(g.norm() >= kGradientUndefinedBelow) || !is_finite(g)) g = input_gradient(p_, x);
    if (g.norm() >= kGradientUndefinedBelow) s.grad = g.normalized();
    return s;
  }
  const MlpParams& params() const { return p_; }

 private:
  MlpParams p_;
  Aabb bounds_;
};

/// Side-selected MF heads. Never reports a clamped value.
class NeuralMedialField final : public MedialField {
 public:
  explicit NeuralMedialField(const MlpParams& params) : p_(&params) {}
  MfValue mf(const Vec3& x) const override {
    const Tape t = forward_batch(*p_, point_row(x, p_->config.dim), false, {true, true, true, false});
    const double phi = t.value(kPhi, 0);
    return {phi > 0.0 ? t.value(kMfPlus, 0) : t.value(kMfMinus, 0), false};
  }

 private:
  const MlpParams* p_;
};

/// Mean |Phi_net| over uniform ground-truth surface samples, in percent of
/// the diagonal.
inline double network_surface_mae(const MlpParams& p, const AnalyticField& gt, std::size_t n, std::uint64_t seed) {
  const SurfaceSampler sampler(gt);
  Rng rng(seed);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), gt.dim());
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 y = sampler.sample(rng).point;
    for (int a = 0; a < gt.dim(); ++a) x(static_cast<Eigen::Index>(i), a) = y[a];
  }
  const Tape t = forward_batch(p, x, false, {true, false, false, false});
  return 100.0 * t.out[kPhi].cwiseAbs().sum() / static_cast<double>(n) / gt.diagonal();
}

}  // namespace medial::nn
