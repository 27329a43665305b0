#include "matlift/demo_assets.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace matlift::demo {

namespace {

Vec2 map_uv(const UvRect& r, double s, double t) {
  return {r.u0 + s * (r.u1 - r.u0), r.v0 + t * (r.v1 - r.v0)};
}

void reserve_material(scene::Mesh& mesh, int material) {
  mesh.material_count = std::max(mesh.material_count, material + 1);
  while (static_cast<int>(mesh.material_names.size()) < mesh.material_count) {
    mesh.material_names.push_back("material_" + std::to_string(mesh.material_names.size()));
  }
}

std::uint32_t push_vertex(scene::Mesh& mesh, const Vec3& p, const Vec2& uv) {
  mesh.vertices.push_back(p);
  mesh.uvs.push_back(uv);
  return static_cast<std::uint32_t>(mesh.vertices.size() - 1);
}

void push_quad(scene::Mesh& mesh, std::uint32_t a, std::uint32_t b, std::uint32_t c,
               std::uint32_t d, int material) {
  mesh.triangles.push_back({a, b, c});
  mesh.triangles.push_back({a, c, d});
  mesh.material_ids.push_back(material);
  mesh.material_ids.push_back(material);
}

// (segments+1) x (rows+1) grid of vertices; seams duplicate vertices so the
// chart stays a single rectangle.
template <typename Surface>
void add_grid(scene::Mesh& mesh, int segments, int rows, int material, const UvRect& uv,
              Surface&& surface) {
  const auto base = static_cast<std::uint32_t>(mesh.vertices.size());
  for (int j = 0; j <= rows; ++j) {
    for (int i = 0; i <= segments; ++i) {
      const double s = static_cast<double>(i) / segments;
      const double t = static_cast<double>(j) / rows;
      push_vertex(mesh, surface(s, t), map_uv(uv, s, t));
    }
  }
  const auto stride = static_cast<std::uint32_t>(segments + 1);
  for (int j = 0; j < rows; ++j) {
    for (int i = 0; i < segments; ++i) {
      const std::uint32_t a = base + j * stride + i;
      push_quad(mesh, a, a + 1, a + stride + 1, a + stride, material);
    }
  }
}

}  // namespace

void add_box(scene::Mesh& mesh, const Vec3& lo, const Vec3& hi, int material, const UvRect& uv) {
  reserve_material(mesh, material);
  // Corners of each face in counter-clockwise order seen from outside.
  const Vec3 c[8] = {{lo.x, lo.y, lo.z}, {hi.x, lo.y, lo.z}, {hi.x, hi.y, lo.z}, {lo.x, hi.y, lo.z},
                     {lo.x, lo.y, hi.z}, {hi.x, lo.y, hi.z}, {hi.x, hi.y, hi.z}, {lo.x, hi.y, hi.z}};
  const int faces[6][4] = {{0, 3, 2, 1}, {4, 5, 6, 7}, {0, 1, 5, 4},
                           {1, 2, 6, 5}, {2, 3, 7, 6}, {3, 0, 4, 7}};
  constexpr double inset = 0.02;
  for (int f = 0; f < 6; ++f) {
    const double cu = (f % 3) / 3.0;
    const double cv = (f / 3) / 2.0;
    const UvRect cell{cu + inset / 3.0, cv + inset / 2.0, cu + (1.0 - inset) / 3.0,
                      cv + (1.0 - inset) / 2.0};
    const Vec2 corner_uv[4] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    std::uint32_t ids[4];
    for (int k = 0; k < 4; ++k) {
      const Vec2 local = map_uv(cell, corner_uv[k].x, corner_uv[k].y);
      ids[k] = push_vertex(mesh, c[faces[f][k]], map_uv(uv, local.x, local.y));
    }
    push_quad(mesh, ids[0], ids[1], ids[2], ids[3], material);
  }
}

void add_sphere(scene::Mesh& mesh, const Vec3& center, double radius, int material, int segments,
                int rings, const UvRect& uv) {
  reserve_material(mesh, material);
  add_grid(mesh, segments, rings, material, uv, [&](double s, double t) {
    const double phi = 2.0 * std::numbers::pi * s;
    const double theta = std::numbers::pi * (t - 0.5);
    return center + Vec3{std::cos(theta) * std::cos(phi), std::cos(theta) * std::sin(phi),
                         std::sin(theta)} * radius;
  });
}

void add_torus(scene::Mesh& mesh, const Vec3& center, double major, double minor, int material,
               int segments, int sides, const UvRect& uv) {
  reserve_material(mesh, material);
  add_grid(mesh, segments, sides, material, uv, [&](double s, double t) {
    const double phi = 2.0 * std::numbers::pi * s;
    const double psi = 2.0 * std::numbers::pi * t;
    const double r = major + minor * std::cos(psi);
    return center + Vec3{r * std::cos(phi), r * std::sin(phi), minor * std::sin(psi)};
  });
}

scene::Mesh three_material_object() {
  scene::Mesh mesh;
  add_box(mesh, {-1.0, -1.0, -1.0}, {1.0, 1.0, -0.4}, 0, {0.0, 0.0, 1.0, 0.5});
  add_sphere(mesh, {0.0, 0.0, 0.3}, 0.6, 1, 48, 24, {0.0, 0.5, 0.5, 1.0});
  add_torus(mesh, {0.0, 0.0, 0.3}, 0.85, 0.15, 2, 64, 16, {0.5, 0.5, 1.0, 1.0});
  mesh.material_names = {"pedestal", "sphere", "ring"};
  return mesh;
}

scene::Mesh single_material_sphere() {
  scene::Mesh mesh;
  add_sphere(mesh, {0.0, 0.0, 0.0}, 1.0, 0);
  mesh.material_names = {"sphere"};
  return mesh;
}

}  // namespace matlift::demo
