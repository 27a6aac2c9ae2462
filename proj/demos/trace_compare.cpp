// Renders one bundled 3D scene with plain sphere tracing and with medial
// sphere tracing, then prints how many steps each needed.
//
//   demo_trace_compare [scene] [out_prefix]

#include <cstdio>
#include <fstream>
#include <string>

#include "medial/medial_field.hpp"
#include "medial/scene.hpp"
#include "medial/trace.hpp"

using namespace medial;

int main(int argc, char** argv) {
  const std::string name = argc > 1 ? argv[1] : "torus";
  const std::string prefix = argc > 2 ? argv[2] : name;
  const Scene scene = bundled_scene(name);
  const AnalyticField field = scene.field();
  const OracleMedialField mf(field);
  const TraceConfig cfg = TraceConfig::for_field(field);

  Camera cam;
  cam.target = field.bounds().center();
  cam.eye = cam.target + 1.5 * field.diagonal() * Vec3(0.6, 0.7, 1.0).normalized();
  cam.width = cam.height = 256;

  for (Backend b : {Backend::Naive, Backend::Medial}) {
    const RenderResult r = render(field, &mf, cam, cfg, b, Shading::LambertAo);
    const std::string path = prefix + "_" + backend_name(b) + ".ppm";
    std::ofstream out(path, std::ios::binary);
    write_ppm(out, r.image);
    std::printf("%-7s mean %.2f iterations per ray, max %zu  -> %s\n", backend_name(b), r.stats.mean(),
                r.stats.histogram.size() - 1, path.c_str());
  }
}
