#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "matlift/geometry.hpp"
#include "matlift/raster.hpp"
#include "matlift/scene.hpp"

namespace matlift::render {

struct Hit {
  double t = 0.0;          // ray parameter (distance along the unit direction)
  std::uint32_t triangle = 0;
  double u = 0.0;          // barycentric weight of vertex 1
  double v = 0.0;          // barycentric weight of vertex 2
};

/// Möller–Trumbore, two-sided. Returns t > t_min on a hit.
std::optional<Hit> intersect_triangle(const Ray& ray, const Vec3& a, const Vec3& b, const Vec3& c,
                                      double t_min = 1e-9);

/// Nearest-hit comparison shared by every traversal: smaller t, then lower triangle id.
inline bool closer(const Hit& a, const Hit& b) {
  return a.t < b.t || (a.t == b.t && a.triangle < b.triangle);
}

/// Median-split bounding volume hierarchy over the triangles of one mesh.
/// Leaves reference a contiguous range of `triangle_order()`.
class Bvh {
 public:
  struct Node {
    Aabb box;
    std::uint32_t left = 0;   // child index, or first triangle slot for leaves
    std::uint32_t right = 0;  // child index, or triangle count for leaves
    bool leaf = false;
  };

  explicit Bvh(const scene::Mesh& mesh, std::size_t max_leaf_size = 4);

  std::optional<Hit> intersect(const Ray& ray, double t_max = INFINITY) const;
  /// True when any triangle is hit with t in (t_min, t_max).
  bool occluded(const Ray& ray, double t_max) const;

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<std::uint32_t>& triangle_order() const { return order_; }
  const scene::Mesh& mesh() const { return *mesh_; }

 private:
  std::uint32_t build(std::uint32_t first, std::uint32_t count,
                      std::vector<Aabb>& tri_boxes, std::vector<Vec3>& centroids);

  const scene::Mesh* mesh_;
  std::size_t max_leaf_;
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> order_;
};

/// Reference traversal over every triangle; same tie rule as Bvh::intersect.
std::optional<Hit> intersect_brute_force(const scene::Mesh& mesh, const Ray& ray);

/// Primary ray through the centre of pixel (x, y).
Ray pixel_ray(const scene::Camera& camera, int x, int y);
/// Ray through continuous image coordinates (pixel centres sit at k + 0.5).
Ray ray_through(const scene::Camera& camera, double px, double py);

/// Continuous pixel coordinates of a world point (pixel centres at k + 0.5);
/// nullopt when the point is behind the camera.
std::optional<Vec2> project(const scene::Camera& camera, const Vec3& point);

/// position + depth * direction of the ray through the pixel centre.
Vec3 hit_point(const scene::Camera& camera, int x, int y, double depth);

struct ViewBundle {
  std::string view_id;
  scene::Camera camera;
  Raster<std::uint8_t> rgb;        // 3 channels
  Raster<float> depth;             // +inf on background
  Raster<std::int32_t> material_id;  // -1 on background
  std::optional<Raster<float>> similarity;

  int width() const { return material_id.width(); }
  int height() const { return material_id.height(); }
  bool foreground(int x, int y) const { return material_id.at(x, y) >= 0; }
  /// Surface point seen by a foreground pixel; throws on background.
  Vec3 surface_point(int x, int y) const;
};

std::array<std::uint8_t, 3> material_color(int material_id);

ViewBundle render_view(const scene::Mesh& mesh, const Bvh& bvh, const scene::Camera& camera,
                       const std::string& view_id = {});

/// Renders every view of a manifest, in manifest order.
std::vector<ViewBundle> render_views(const scene::Mesh& mesh, const Bvh& bvh,
                                     const scene::ViewManifest& manifest);

struct UvMap {
  Raster<float> values;
  Raster<std::uint8_t> coverage;

  int width() const { return values.width(); }
  int height() const { return values.height(); }
};

/// Value of a per-surface field at a surface point lying on `triangle`.
using SurfaceFunction = std::function<float(const Vec3& point, std::uint32_t triangle)>;

/// Rasterizes every triangle into UV space (row 0 is v = 1) and evaluates `fn`
/// at the interpolated surface point of each covered texel centre. Later
/// triangles overwrite earlier ones where charts overlap.
UvMap bake_uv(const scene::Mesh& mesh, const Bvh& bvh, std::span<const scene::Camera> cameras,
              const SurfaceFunction& fn, int resolution);

}  // namespace matlift::render
