// Short training run on the unit disk. Prints the loss every few hundred
// steps, then compares the network's medial field with the oracle.
//
//   demo_train_disk [steps]

#include <cstdio>
#include <cstdlib>

#include "medial/nn/train.hpp"
#include "medial/scene.hpp"

using namespace medial;

int main(int argc, char** argv) {
  const AnalyticField field = bundled_scene("disk").field();
  nn::TrainConfig cfg;
  cfg.steps = argc > 1 ? std::atoi(argv[1]) : 3000;
  const int every = std::max(1, cfg.steps / 10);
  const nn::MlpParams p = nn::train(field, cfg, [&](const nn::StepLog& s) {
    if (s.step % every == 0) std::printf("step %5d  loss %.5g\n", s.step, s.loss.total);
  });

  std::printf("surface MAE %.4f%% of diag\n", nn::network_surface_mae(p, field, 4096, 1));
  const nn::NeuralMedialField net(p);
  const OracleMedialField oracle(field);
  for (const Vec3& x : {Vec3(0.3, 0, 0), Vec3(-0.5, 0.5, 0), Vec3(0, -0.9, 0)})
    std::printf("MF(%.1f, %.1f): network %.4f, oracle %.4f\n", x.x(), x.y(), net.value(x), oracle.value(x));
}
