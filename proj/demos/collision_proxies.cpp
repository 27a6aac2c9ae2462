// Sphere sets for the two-disk scene at a few memory budgets, medial spheres
// against spheres tangent at random interior points.

#include <cstdio>

#include "medial/proxy.hpp"
#include "medial/scene.hpp"

using namespace medial;

int main() {
  const AnalyticField field = bundled_scene("two_disks").field();
  const OracleMedialField mf(field);
  const ParetoConfig cfg = ParetoConfig::for_field(field);

  std::printf("%-9s %7s %7s %10s\n", "kind", "budget", "floats", "MAE %diag");
  for (const ParetoRow& r : pareto_report(field, mf, {6, 12, 24, 48}, cfg))
    std::printf("%-9s %7zu %7zu %10.4f\n", proxy_kind_name(r.kind), r.budget, r.floats, r.mae_percent);

  // Two spheres are enough once they are the medial ones.
  FssConfig fc = FssConfig::for_field(field);
  fc.m_select = 2;
  const ProxySet p = medial_proxy(sample_medial_candidates(field, mf, fc.n_candidates, fc.seed), 2, fc);
  for (const auto& s : p.spheres)
    std::printf("sphere at (%.4f, %.4f) radius %.4f\n", s.center.x(), s.center.y(), s.radius);
}
