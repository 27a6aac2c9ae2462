#include <gtest/gtest.h>

#include <sstream>

#include "medial/nn/train.hpp"
#include "medial/scene.hpp"
#include "support/tiny_net.hpp"

using namespace medial;
using namespace medial::nn;
using medial::fixtures::perturbed;
using medial::fixtures::tiny_config;

namespace {

Eigen::MatrixXd rows(std::initializer_list<std::array<double, 2>> pts) {
  Eigen::MatrixXd m(pts.size(), 2);
  int i = 0;
  for (const auto& p : pts) {
    m(i, 0) = p[0];
    m(i, 1) = p[1];
    ++i;
  }
  return m;
}

struct Disk {
  Scene scene = bundled_scene("disk");
  AnalyticField field = scene.field();
};

}  // namespace

TEST(Mlp, LayerShapesChain) {
  MlpConfig c;
  for (int d : {2, 3}) {
    c.dim = d;
    const MlpParams p = make_layout(c);
    ASSERT_EQ(p.backbone.size(), 6u);
    EXPECT_EQ(p.backbone[0].in, d + 2 * 64);
    for (std::size_t l = 0; l < p.backbone.size(); ++l) {
      EXPECT_EQ(p.backbone[l].out, 64);
      if (l > 0) {
        EXPECT_EQ(p.backbone[l].in, p.backbone[l - 1].out);
      }
    }
    for (int h = 0; h < kHeads; ++h) {
      ASSERT_EQ(p.heads[h].size(), 3u);
      EXPECT_EQ(p.heads[h][0].in, 64);
      EXPECT_EQ(p.heads[h][1].in, 64);
      EXPECT_EQ(p.heads[h][2].out, h == kGrad ? d : 1);
    }
    std::size_t total = 0;
    for (const auto& s : p.backbone) total += s.size();
    for (const auto& hs : p.heads)
      for (const auto& s : hs) total += s.size();
    EXPECT_EQ(total, p.num_params());
  }
}

TEST(Mlp, InitIsDeterministic) {
  const Disk s;
  MlpConfig c;
  const MlpParams a = init_network(c, 7, s.field.bounds());
  const MlpParams b = init_network(c, 7, s.field.bounds());
  const MlpParams other = init_network(c, 8, s.field.bounds());
  EXPECT_EQ(a.theta, b.theta);
  EXPECT_EQ(a.fourier, b.fourier);
  EXPECT_EQ(a.fourier_weight, b.fourier_weight);
  EXPECT_NE(a.theta, other.theta);
}

TEST(Mlp, FourierWeightsScaleWithFrequency) {
  const Disk s;
  const MlpParams p = init_network(MlpConfig{}, 1, s.field.bounds());
  for (int i = 0; i < p.config.bands; ++i)
    EXPECT_NEAR(p.fourier_weight[i], 1e-3 * p.fourier.row(i).norm(), 1e-18);
  Eigen::MatrixXd f(2, 3);
  f << 0.3, -1.2, 0.4, 0.6, -2.4, 0.8;
  const Eigen::VectorXd w = fourier_weights(f, 1e-3);
  EXPECT_DOUBLE_EQ(w[1], 2.0 * w[0]);
}

TEST(Mlp, InitIsSphereLike) {
  for (const char* name : {"disk", "box", "two_disks", "sphere", "torus"}) {
    const Scene sc = bundled_scene(name);
    const AnalyticField f = sc.field();
    MlpConfig c;
    c.dim = f.dim();
    const MlpParams p = init_network(c, 3, f.bounds());
    const Vec3 center = f.bounds().center();
    const double diag = f.diagonal();
    EXPECT_LT(forward(p, center).phi, 0.0) << name;
    Rng rng(5);
    for (int ray = 0; ray < 16; ++ray) {
      const Vec3 dir = uniform_direction(f.dim(), rng);
      EXPECT_GT(forward(p, center + diag * dir).phi, 0.0) << name;
      // One sign change along the ray.
      int crossings = 0;
      double prev = forward(p, center).phi;
      for (int i = 1; i <= 1000; ++i) {
        const double v = forward(p, center + (diag * i / 1000.0) * dir).phi;
        if ((v > 0.0) != (prev > 0.0)) ++crossings;
        prev = v;
      }
      EXPECT_EQ(crossings, 1) << name << " ray " << ray;
    }
  }
}

TEST(Mlp, ForwardIsReproducibleAndSelectsMfBySide) {
  const Disk s;
  const MlpParams p = init_network(MlpConfig{}, 2, s.field.bounds());
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const Vec3 x = uniform_in_box(s.field.bounds(), 2, rng);
    const NetOutput a = forward(p, x), b = forward(p, x);
    EXPECT_EQ(a.phi, b.phi);
    EXPECT_EQ(a.mf_plus, b.mf_plus);
    EXPECT_EQ(a.grad_head, b.grad_head);
    EXPECT_EQ(a.mf(), a.phi > 0.0 ? a.mf_plus : a.mf_minus);
  }
}

TEST(Mlp, ZeroWeightHeadsOutputTheirBiases) {
  const Disk s;
  MlpParams p = init_network(tiny_config(), 2, s.field.bounds());
  for (int h = 0; h < kHeads; ++h) {
    const LayerSlot last = p.heads[h].back();
    p.W(last).setZero();
    for (int o = 0; o < last.out; ++o) p.b(last)[o] = 0.25 * (h + 1) + o;
  }
  const NetOutput o = forward(p, Vec3(0.3, -0.2, 0));
  EXPECT_EQ(o.phi, 0.25);
  EXPECT_EQ(o.mf_plus, 0.5);
  EXPECT_EQ(o.mf_minus, 0.75);
  EXPECT_EQ(o.grad_head.x(), 1.0);
  EXPECT_EQ(o.grad_head.y(), 2.0);
}

TEST(Mlp, InputGradientMatchesFiniteDifferences) {
  const Disk s;
  const MlpParams p = init_network(MlpConfig{}, 4, s.field.bounds());
  Rng rng(2);
  const double h = 1e-5;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 x = uniform_in_box(s.field.bounds(), 2, rng);
    const Vec3 g = input_gradient(p, x);
    Vec3 fd = Vec3::Zero();
    for (int k = 0; k < 2; ++k)
      fd[k] = (forward(p, x + h * axis_vector(k)).phi - forward(p, x - h * axis_vector(k)).phi) / (2 * h);
    worst = std::max(worst, (g - fd).norm() / std::max(fd.norm(), 1e-3));
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Mlp, LinearNetworkGradientIsWeightProduct) {
  const Disk s;
  MlpConfig c = tiny_config();
  c.bands = 0;
  c.activation = Activation::Identity;
  const MlpParams p = perturbed(init_network(c, 6, s.field.bounds()), 1, 0.3);
  Eigen::MatrixXd prod = Eigen::MatrixXd::Identity(2, 2);
  for (const auto& l : p.backbone) prod = p.W(l) * prod;
  for (const auto& l : p.heads[kPhi]) prod = p.W(l) * prod;
  const Vec3 g = input_gradient(p, Vec3(0.7, -1.1, 0));
  EXPECT_NEAR(g.x(), prod(0, 0), 1e-12);
  EXPECT_NEAR(g.y(), prod(0, 1), 1e-12);
}

TEST(Mlp, ConstantNetworkHasZeroGradient) {
  const Disk s;
  MlpParams p = init_network(tiny_config(), 6, s.field.bounds());
  p.W(p.backbone[0]).setZero();
  const Vec3 g = input_gradient(p, Vec3(0.4, 0.1, 0));
  EXPECT_EQ(g.norm(), 0.0);
}

// A 1-unit network written out by hand: h = sp(w.x + b0), every head is
// linear in h. All nine terms are recomputed from closed forms.
TEST(Losses, HandBuiltNetworkMatchesClosedForm) {
  const Disk s;
  MlpConfig c;
  c.dim = 2;
  c.bands = 0;
  c.width = 1;
  c.backbone_layers = 1;
  c.head_layers = 0;
  c.beta = 1.0;
  MlpParams p = make_layout(c);
  const Eigen::Vector2d w(0.8, -0.5);
  const double b0 = 0.1;
  p.W(p.backbone[0]) << w.x(), w.y();
  p.b(p.backbone[0])[0] = b0;
  const double a = 1.3, ca = -0.9, mp = 0.7, cp = 0.2, mm = -0.4, cm = 0.6;
  const Eigen::Vector2d q(0.5, -1.2), rq(0.1, 0.3);
  p.W(p.heads[kPhi][0])(0, 0) = a;
  p.b(p.heads[kPhi][0])[0] = ca;
  p.W(p.heads[kMfPlus][0])(0, 0) = mp;
  p.b(p.heads[kMfPlus][0])[0] = cp;
  p.W(p.heads[kMfMinus][0])(0, 0) = mm;
  p.b(p.heads[kMfMinus][0])[0] = cm;
  p.W(p.heads[kGrad][0]) << q.x(), q.y();
  p.b(p.heads[kGrad][0]) << rq.x(), rq.y();

  auto sp = [](double z) { return std::log1p(std::exp(z)); };
  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  auto phi = [&](const Eigen::Vector2d& x) { return a * sp(w.dot(x) + b0) + ca; };
  auto gphi = [&](const Eigen::Vector2d& x) -> Eigen::Vector2d { return a * sig(w.dot(x) + b0) * w; };

  SampleBatch batch;
  const double th[3] = {0.3, 2.0, 4.4};
  batch.surface_points.resize(3, 2);
  batch.surface_normals.resize(3, 2);
  for (int i = 0; i < 3; ++i) {
    batch.surface_points.row(i) << std::cos(th[i]), std::sin(th[i]);
    batch.surface_normals.row(i) = batch.surface_points.row(i);
  }
  batch.volume_points = rows({{{0.3, 0.2}}, {{1.7, -0.4}}, {{-0.5, 0.6}}});

  TrainConfig cfg;
  cfg.net = c;
  const double t = 0.25;
  const LossResult r = compute_losses(p, s.field, batch, cfg, t, nullptr);

  std::array<double, kTerms> want{};
  for (int i = 0; i < 3; ++i) {
    const Eigen::Vector2d x = batch.surface_points.row(i).transpose();
    want[kSurface] += std::pow(phi(x), 2) / 3;
    want[kNormal] += (gphi(x) - x).squaredNorm() / 3;
  }
  const double hs = 1e-3 * s.field.diagonal();
  for (int i = 0; i < 3; ++i) {
    const Eigen::Vector2d x = batch.volume_points.row(i).transpose();
    const double z = w.dot(x) + b0, f = phi(x);
    const Eigen::Vector2d g = gphi(x);
    want[kEikonal] += std::pow(g.norm() - 1.0, 2) / 3;
    want[kMinSurface] += std::exp(-100.0 * std::abs(f)) / 3;
    want[kGradient] += (q * sp(z) + rq - g).squaredNorm() / 3;
    want[kCurvature] += ((gphi(x + hs * g) - g) / hs).lpNorm<1>() / 3;
    const double mf = f > 0.0 ? mp * sp(z) + cp : mm * sp(z) + cm;
    const Eigen::Vector2d gmf = (f > 0.0 ? mp : mm) * sig(z) * w;
    // Disk of radius 1 at the origin.
    const double r0 = x.norm(), gt = r0 - 1.0, side = gt > 0.0 ? 1.0 : -1.0;
    const Eigen::Vector2d n = x / r0;
    want[kMaximal] += std::pow(std::max(std::abs(gt) - mf, 0.0), 2) / 3;
    const Eigen::Vector2d proj = x + side * n * (mf - std::abs(gt));
    want[kInscribed] += std::pow(std::abs(proj.norm() - 1.0) - mf, 2) / 3;
    want[kOrthogonal] += std::pow(gmf.dot(n), 2) / 3;
  }
  double total = 0.0;
  const auto wt = cfg.weights.at(t);
  for (int k = 0; k < kTerms; ++k) {
    EXPECT_NEAR(r.terms[k], want[k], 1e-12 * std::max(1.0, std::abs(want[k]))) << kTermNames[k];
    total += wt[k] * want[k];
  }
  EXPECT_NEAR(r.total, total, 1e-10 * std::abs(total));
  EXPECT_NEAR(wt[kCurvature], std::pow(10.0, -2.0), 1e-15);
}

TEST(Losses, CurvatureScheduleEndpoints) {
  const LossWeights w;
  EXPECT_DOUBLE_EQ(w.curvature_at(0.0), 1e-1);
  EXPECT_DOUBLE_EQ(w.curvature_at(1.0), 1e-5);
  const auto a = w.at(0.0);
  EXPECT_EQ(a[kSurface], 1e4);
  EXPECT_EQ(a[kNormal], 10.0);
  EXPECT_EQ(a[kMaximal], 1e2);
  EXPECT_EQ(a[kInscribed], 5e2);
  EXPECT_EQ(a[kOrthogonal], 3e-2);
  EXPECT_EQ(a[kEikonal], 1.0);
  EXPECT_EQ(a[kMinSurface], 1.0);
  EXPECT_EQ(a[kGradient], 1.0);
}

TEST(Losses, VanishOnExactValues) {
  for (const char* name : {"disk", "box", "two_disks", "slab"}) {
    const Scene sc = bundled_scene(name);
    const AnalyticField f = sc.field();
    const OracleMedialField oracle(f);
    const double diag = f.diagonal(), delta = 1e-2 * diag, h = 1e-5 * diag;
    const SurfaceSampler sampler(f);
    Rng rng(4);
    for (int i = 0; i < 200; ++i) {
      const SurfacePoint sp = sampler.sample(rng);
      EXPECT_LT(estimator::surface(f.phi(sp.point)), 1e-24);
      EXPECT_LT(estimator::normal(eval_grad(f, sp.point), sp.normal), 1e-20);
    }
    int ortho_checked = 0;
    for (int i = 0; i < 500; ++i) {
      const Vec3 x = uniform_in_box(f.bounds(), 2, rng);
      const FieldSample s = f.sample(x);
      if (!s.grad) continue;
      EXPECT_LT(estimator::eikonal(*s.grad), 1e-24);
      EXPECT_EQ(estimator::gradient(*s.grad, *s.grad), 0.0);
      const MedialSample ms = oracle.sample(x);
      EXPECT_EQ(estimator::maximal(std::abs(s.phi), ms.radius), 0.0);
      if (!ms.clamped) {
        const Vec3 proj = x + side_sign(s.phi) * *s.grad * (ms.radius - std::abs(s.phi));
        EXPECT_LT(estimator::inscribed(std::abs(f.phi(proj)), ms.radius), 1e-16) << name;
      }
      if (std::abs(s.phi) < delta || ms.radius - std::abs(s.phi) < delta) continue;
      Vec3 gmf = Vec3::Zero();
      for (int k = 0; k < 2; ++k)
        gmf[k] = (oracle.value(x + h * axis_vector(k)) - oracle.value(x - h * axis_vector(k))) / (2 * h);
      EXPECT_LT(estimator::orthogonal(gmf, *s.grad), 1e-3) << name;
      ++ortho_checked;
    }
    EXPECT_GT(ortho_checked, 100) << name;
  }
}

TEST(Losses, EmptyBatchIsRejected) {
  const Disk s;
  const MlpParams p = init_network(tiny_config(), 1, s.field.bounds());
  SampleBatch b;
  b.surface_points.resize(0, 2);
  b.surface_normals.resize(0, 2);
  b.volume_points = rows({{{0.1, 0.2}}});
  TrainConfig cfg;
  cfg.net = p.config;
  try {
    compute_losses(p, s.field, b, cfg, 0.0, nullptr);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyBatch);
  }
}

// Every term's parameter gradient against central differences on a tiny net.
TEST(Losses, ParameterGradientsMatchFiniteDifferences) {
  const Disk s;
  const MlpParams p0 = perturbed(init_network(tiny_config(), 9, s.field.bounds()), 2, 0.05);
  Rng rng(3);
  const SurfaceSampler sampler(s.field);
  SampleBatch batch = sample_batch(sampler, 2, s.field.diagonal(), 6, 0.3, rng);
  TrainConfig cfg;
  cfg.net = p0.config;
  // Keep the MF head choice away from the Phi = 0 switch.
  for (int i = 0; i < batch.volume_points.rows(); ++i) {
    const Vec3 x(batch.volume_points(i, 0), batch.volume_points(i, 1), 0);
    ASSERT_GT(std::abs(forward(p0, x).phi), 1e-4);
  }
  const double h = 1e-5;
  for (int term = 0; term < kTerms; ++term) {
    TrainConfig c = cfg;
    std::array<double*, kTerms> ws{&c.weights.surface, &c.weights.normal,     &c.weights.maximal,
                                   &c.weights.inscribed, &c.weights.orthogonal, &c.weights.eikonal,
                                   &c.weights.minsurface, nullptr,             &c.weights.gradient};
    for (double* wp : ws)
      if (wp) *wp = 0.0;
    if (term == kCurvature) {
      c.weights.curvature_start = 0.0;
      c.weights.curvature_end = 0.0;
    } else {
      *ws[term] = 1.0;
      c.weights.curvature_start = c.weights.curvature_end = 300.0;  // weight 1e-300
    }
    Eigen::VectorXd g;
    compute_losses(p0, s.field, batch, c, 0.0, &g);
    Eigen::VectorXd fd(g.size());
    MlpParams p = p0;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      const double keep = p.theta[i];
      p.theta[i] = keep + h;
      const double up = compute_losses(p, s.field, batch, c, 0.0, nullptr).total;
      p.theta[i] = keep - h;
      const double dn = compute_losses(p, s.field, batch, c, 0.0, nullptr).total;
      p.theta[i] = keep;
      fd[i] = (up - dn) / (2 * h);
    }
    ASSERT_GT(fd.norm(), 0.0) << kTermNames[term];
    EXPECT_LT((g - fd).norm() / fd.norm(), 1e-3) << kTermNames[term];
  }
}

TEST(Losses, TinyNetworkInputGradient) {
  const Disk s;
  const MlpParams p = perturbed(init_network(tiny_config(), 9, s.field.bounds()), 2, 0.05);
  Rng rng(8);
  const double h = 1e-5;
  for (int i = 0; i < 200; ++i) {
    const Vec3 x = uniform_in_box(s.field.bounds(), 2, rng);
    const Vec3 g = input_gradient(p, x);
    Vec3 fd = Vec3::Zero();
    for (int k = 0; k < 2; ++k)
      fd[k] = (forward(p, x + h * axis_vector(k)).phi - forward(p, x - h * axis_vector(k)).phi) / (2 * h);
    EXPECT_LT((g - fd).norm() / std::max(fd.norm(), 1e-6), 1e-3);
  }
}

TEST(Sampling, SurfaceOnDiskAndOffsetStatistics) {
  const Disk s;
  const SurfaceSampler sampler(s.field);
  Rng rng(1);
  const double sigma = 0.5;
  const SampleBatch b = sample_batch(sampler, 2, s.field.diagonal(), 50000, sigma, rng);
  double sum = 0.0, sq = 0.0;
  const long n = 2 * b.volume_points.rows();
  for (Eigen::Index i = 0; i < b.surface_points.rows(); ++i) {
    const Eigen::Vector2d y = b.surface_points.row(i);
    EXPECT_LT(std::abs(y.norm() - 1.0), 1e-9);
    EXPECT_LT((b.surface_normals.row(i) - y.transpose()).norm(), 1e-9);
    for (int a = 0; a < 2; ++a) {
      const double o = b.volume_points(i, a) - b.surface_points(i, a);
      sum += o;
      sq += o * o;
    }
  }
  const double mean = sum / n, sd = std::sqrt(sq / n - mean * mean);
  EXPECT_NEAR(sd, sigma * s.field.diagonal(), 0.05 * sigma * s.field.diagonal());
}

TEST(Sampling, FixedSeedGivesIdenticalBatches) {
  const Disk s;
  const SurfaceSampler sampler(s.field);
  Rng a(5), b(5);
  const SampleBatch x = sample_batch(sampler, 2, s.field.diagonal(), 64, 0.5, a);
  const SampleBatch y = sample_batch(sampler, 2, s.field.diagonal(), 64, 0.5, b);
  EXPECT_EQ(x.surface_points, y.surface_points);
  EXPECT_EQ(x.volume_points, y.volume_points);
}

TEST(Train, DeterministicAndDecreasing) {
  const Disk s;
  TrainConfig cfg;
  cfg.steps = 150;
  cfg.batch_size = 32;
  cfg.seed = 11;
  std::vector<double> a, b;
  const MlpParams pa = train(s.field, cfg, [&](const StepLog& l) { a.push_back(l.loss.total); });
  const MlpParams pb = train(s.field, cfg, [&](const StepLog& l) { b.push_back(l.loss.total); });
  EXPECT_EQ(a, b);
  EXPECT_EQ(pa.theta, pb.theta);
  ASSERT_EQ(a.size(), 150u);
  // Compare on one fixed batch so sampling noise does not decide the outcome.
  const SurfaceSampler sampler(s.field);
  Rng rng(99);
  const SampleBatch eval = sample_batch(sampler, 2, s.field.diagonal(), 512, cfg.sigma_volume, rng);
  const MlpParams p0 = init_network(cfg.net, cfg.seed, s.field.bounds());
  const double before = compute_losses(p0, s.field, eval, cfg, 0.0, nullptr).total;
  const double after = compute_losses(pa, s.field, eval, cfg, 0.0, nullptr).total;
  EXPECT_LT(after, before);
}

TEST(Train, DivergenceIsReported) {
  const Disk s;
  TrainConfig cfg;
  cfg.steps = 20;
  cfg.batch_size = 8;
  cfg.lr = 1e300;
  try {
    train(s.field, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DivergedLoss);
  }
}

TEST(Train, LossCsvLayout) {
  std::ostringstream os;
  write_loss_header(os);
  StepLog l;
  l.step = 3;
  l.loss.total = 2.5;
  write_loss_row(os, l);
  EXPECT_EQ(os.str(),
            "step,surface,normal,maximal,inscribed,orthogonal,eikonal,minsurface,curvature,gradient,total\n"
            "3,0,0,0,0,0,0,0,0,0,2.5\n");
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const Disk s;
  const MlpParams p = init_network(MlpConfig{}, 21, s.field.bounds());
  std::stringstream ss;
  write_checkpoint(ss, {p, s.field.bounds(), {{"scene", "disk"}}});
  const Checkpoint ck = read_checkpoint(ss);
  EXPECT_EQ(ck.params.theta, p.theta);
  EXPECT_EQ(ck.params.fourier, p.fourier);
  EXPECT_EQ(ck.params.seed, 21u);
  EXPECT_EQ(ck.extra.at("scene"), "disk");
  EXPECT_EQ(ck.bounds.lo, s.field.bounds().lo);
  const Vec3 x(0.2, -0.7, 0);
  EXPECT_EQ(forward(ck.params, x).phi, forward(p, x).phi);
}

TEST(Checkpoint, CorruptInputIsRejected) {
  const Disk s;
  const MlpParams p = init_network(tiny_config(), 21, s.field.bounds());
  std::stringstream ss;
  write_checkpoint(ss, {p, s.field.bounds(), {}});
  const std::string full = ss.str();
  for (const std::string& bad : {full.substr(0, full.size() - 9), std::string("{\"format\":\"x\"}\n"), std::string("garbage\n"),
                                 std::string()}) {
    std::istringstream is(bad);
    try {
      read_checkpoint(is);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::InvalidCheckpoint);
    }
  }
}

TEST(Adapters, MatchForwardAndNormalizeGradient) {
  const Disk s;
  const MlpParams p = init_network(MlpConfig{}, 13, s.field.bounds());
  const NeuralDistanceField nf(p, s.field.bounds());
  const NeuralMedialField nm(nf.params());
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const Vec3 x = uniform_in_box(s.field.bounds(), 2, rng);
    const NetOutput o = forward(p, x);
    EXPECT_EQ(eval_phi(nf, x), o.phi);
    const FieldSample fs = nf.sample(x);
    ASSERT_TRUE(fs.grad.has_value());
    EXPECT_NEAR(fs.grad->norm(), 1.0, 1e-12);
    EXPECT_EQ(nm.value(x), o.mf());
    EXPECT_FALSE(nm.mf(x).clamped);
  }
}

TEST(Adapters, GradientFallsBackToInputGradient) {
  const Disk s;
  MlpParams p = init_network(MlpConfig{}, 13, s.field.bounds());
  const LayerSlot last = p.heads[kGrad].back();
  p.W(last).setZero();
  p.b(last).setZero();
  const NeuralDistanceField nf(p, s.field.bounds());
  const Vec3 x(0.5, 0.25, 0);
  const Vec3 g = input_gradient(p, x);
  EXPECT_LT((*nf.sample(x).grad - g.normalized()).norm(), 1e-12);
}
