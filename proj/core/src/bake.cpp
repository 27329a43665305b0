#include <algorithm>
#include <cmath>

#include "matlift/error.hpp"
#include "matlift/render.hpp"

namespace matlift::render {

UvMap bake_uv(const scene::Mesh& mesh, const Bvh& /*bvh*/,
              std::span<const scene::Camera> /*cameras*/, const SurfaceFunction& fn,
              int resolution) {
  if (!mesh.has_uv()) fail(ErrorCode::kInvalidArgument, "bake_uv: mesh has no uv coordinates");
  if (resolution < 1) fail(ErrorCode::kInvalidArgument, "bake_uv: resolution must be >= 1");

  UvMap map{Raster<float>(resolution, resolution, 1, 0.0f),
            Raster<std::uint8_t>(resolution, resolution, 1, 0)};
  const double r = resolution;

  for (std::uint32_t tri = 0; tri < mesh.triangles.size(); ++tri) {
    const auto& t = mesh.triangles[tri];
    // Texel space: x = u * R, y = (1 - v) * R.
    Vec2 p[3];
    for (int k = 0; k < 3; ++k) {
      const Vec2 uv = mesh.uvs[t[k]];
      p[k] = {uv.x * r, (1.0 - uv.y) * r};
    }
    const double area = (p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y);
    if (std::abs(area) < 1e-18) continue;

    const int x0 = std::max(0, static_cast<int>(std::floor(std::min({p[0].x, p[1].x, p[2].x}))));
    const int x1 = std::min(resolution - 1, static_cast<int>(std::ceil(std::max({p[0].x, p[1].x, p[2].x}))));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min({p[0].y, p[1].y, p[2].y}))));
    const int y1 = std::min(resolution - 1, static_cast<int>(std::ceil(std::max({p[0].y, p[1].y, p[2].y}))));

    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double cx = x + 0.5;
        const double cy = y + 0.5;
        // Barycentric weights from signed sub-areas.
        const double w0 = ((p[1].x - cx) * (p[2].y - cy) - (p[2].x - cx) * (p[1].y - cy)) / area;
        const double w1 = ((p[2].x - cx) * (p[0].y - cy) - (p[0].x - cx) * (p[2].y - cy)) / area;
        const double w2 = 1.0 - w0 - w1;
        if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
        const Vec3 point = mesh.vertices[t[0]] * w0 + mesh.vertices[t[1]] * w1 +
                           mesh.vertices[t[2]] * w2;
        map.values.at(x, y) = fn(point, tri);
        map.coverage.at(x, y) = 1;
      }
    }
  }
  return map;
}

}  // namespace matlift::render
