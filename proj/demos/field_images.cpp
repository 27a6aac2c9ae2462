// Colour maps of the distance field and the medial field of each 2D scene.
// Inside the shape MF is constant along every spoke, so its image shows the
// medial axis as the ridge where the bands meet.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "medial/medial_field.hpp"
#include "medial/scene.hpp"
#include "medial/trace.hpp"

using namespace medial;

int main() {
  for (const auto& name : bundled_scene_names(2)) {
    const AnalyticField field = bundled_scene(name).field();
    const OracleMedialField mf(field);
    const double diag = field.diagonal();
    const Aabb view = field.bounds().padded(0.15 * diag, 2);
    const Palette pal{0.5 * diag, 0.04 * diag};
    const int w = 320;
    const int h = static_cast<int>(std::lround(w * (view.hi.y() - view.lo.y()) / (view.hi.x() - view.lo.x())));

    const Image phi = visualize_field_2d([&](const Vec3& x) { return field.phi(x); }, view, w, h, pal);
    const Image thick = visualize_field_2d(
        [&](const Vec3& x) { return side_sign(field.phi(x)) * std::min(mf.value(x), diag); }, view, w, h, pal);
    for (const auto& [suffix, img] : {std::pair{"phi", &phi}, std::pair{"mf", &thick}}) {
      const std::string path = name + "_" + suffix + ".ppm";
      std::ofstream out(path, std::ios::binary);
      write_ppm(out, *img);
      std::printf("wrote %s\n", path.c_str());
    }
  }
}
