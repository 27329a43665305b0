#include "matlift/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "matlift/error.hpp"
#include "matlift/parallel.hpp"

namespace matlift::render {

std::optional<Hit> intersect_triangle(const Ray& ray, const Vec3& a, const Vec3& b, const Vec3& c,
                                      double t_min) {
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 p = cross(ray.direction, e2);
  const double det = dot(e1, p);
  if (std::abs(det) < 1e-14) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 s = ray.origin - a;
  const double u = dot(s, p) * inv;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 q = cross(s, e1);
  const double v = dot(ray.direction, q) * inv;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  const double t = dot(e2, q) * inv;
  if (!(t > t_min)) return std::nullopt;
  return Hit{t, 0, u, v};
}

namespace {

Aabb triangle_box(const scene::Mesh& mesh, std::size_t tri) {
  Aabb box;
  for (auto idx : mesh.triangles[tri]) box.extend(mesh.vertices[idx]);
  return box;
}

// Slab test; returns the entry distance or +inf when the box is missed.
double box_entry(const Aabb& box, const Ray& ray, const Vec3& inv_dir, double t_max) {
  double t0 = 0.0;
  double t1 = t_max;
  for (int axis = 0; axis < 3; ++axis) {
    const double o = ray.origin[axis];
    const double inv = inv_dir[axis];
    double near = (box.lo[axis] - o) * inv;
    double far = (box.hi[axis] - o) * inv;
    if (near > far) std::swap(near, far);
    // NaN from 0 * inf (origin on a slab plane) must not reject the box.
    if (!(near <= t1) && !std::isnan(near)) return INFINITY;
    if (near > t0) t0 = near;
    if (far < t1) t1 = far;
    if (t0 > t1) return INFINITY;
  }
  return t0;
}

Vec3 inverse_direction(const Vec3& d) {
  const auto inv = [](double v) {
    return v != 0.0 ? 1.0 / v : std::copysign(std::numeric_limits<double>::infinity(), v);
  };
  return {inv(d.x), inv(d.y), inv(d.z)};
}

}  // namespace

Bvh::Bvh(const scene::Mesh& mesh, std::size_t max_leaf_size)
    : mesh_(&mesh), max_leaf_(std::max<std::size_t>(1, max_leaf_size)) {
  if (mesh.triangles.empty()) fail(ErrorCode::kEmptyInput, "build_bvh: mesh has no triangles");
  const auto n = static_cast<std::uint32_t>(mesh.triangles.size());
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), 0u);
  std::vector<Aabb> boxes(n);
  std::vector<Vec3> centroids(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    boxes[i] = triangle_box(mesh, i);
    centroids[i] = boxes[i].center();
  }
  nodes_.reserve(2 * n / max_leaf_ + 1);
  build(0, n, boxes, centroids);
}

std::uint32_t Bvh::build(std::uint32_t first, std::uint32_t count, std::vector<Aabb>& boxes,
                         std::vector<Vec3>& centroids) {
  const auto index = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();
  Aabb box;
  Aabb centroid_box;
  for (std::uint32_t i = first; i < first + count; ++i) {
    box.extend(boxes[order_[i]]);
    centroid_box.extend(centroids[order_[i]]);
  }
  nodes_[index].box = box;
  if (count <= max_leaf_ || centroid_box.diagonal() == 0.0) {
    nodes_[index].leaf = true;
    nodes_[index].left = first;
    nodes_[index].right = count;
    return index;
  }
  const int axis = centroid_box.longest_axis();
  const std::uint32_t half = count / 2;
  auto begin = order_.begin() + first;
  std::nth_element(begin, begin + half, begin + count, [&](std::uint32_t a, std::uint32_t b) {
    const double ca = centroids[a][axis];
    const double cb = centroids[b][axis];
    return ca < cb || (ca == cb && a < b);
  });
  const std::uint32_t left = build(first, half, boxes, centroids);
  const std::uint32_t right = build(first + half, count - half, boxes, centroids);
  nodes_[index].left = left;
  nodes_[index].right = right;
  return index;
}

std::optional<Hit> Bvh::intersect(const Ray& ray, double t_max) const {
  const Vec3 inv_dir = inverse_direction(ray.direction);
  std::optional<Hit> best;
  double best_t = t_max;
  std::uint32_t stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (box_entry(node.box, ray, inv_dir, best_t) == INFINITY) continue;
    if (node.leaf) {
      for (std::uint32_t i = node.left; i < node.left + node.right; ++i) {
        const std::uint32_t tri = order_[i];
        const auto& t = mesh_->triangles[tri];
        auto hit = intersect_triangle(ray, mesh_->vertices[t[0]], mesh_->vertices[t[1]],
                                      mesh_->vertices[t[2]]);
        if (!hit || hit->t > best_t) continue;
        hit->triangle = tri;
        if (!best || closer(*hit, *best)) {
          best = hit;
          best_t = hit->t;
        }
      }
      continue;
    }
    stack[top++] = node.right;
    stack[top++] = node.left;
  }
  return best;
}

bool Bvh::occluded(const Ray& ray, double t_max) const {
  const Vec3 inv_dir = inverse_direction(ray.direction);
  std::uint32_t stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (box_entry(node.box, ray, inv_dir, t_max) == INFINITY) continue;
    if (node.leaf) {
      for (std::uint32_t i = node.left; i < node.left + node.right; ++i) {
        const auto& t = mesh_->triangles[order_[i]];
        const auto hit = intersect_triangle(ray, mesh_->vertices[t[0]], mesh_->vertices[t[1]],
                                            mesh_->vertices[t[2]]);
        if (hit && hit->t < t_max) return true;
      }
      continue;
    }
    stack[top++] = node.right;
    stack[top++] = node.left;
  }
  return false;
}

std::optional<Hit> intersect_brute_force(const scene::Mesh& mesh, const Ray& ray) {
  std::optional<Hit> best;
  for (std::uint32_t i = 0; i < mesh.triangles.size(); ++i) {
    const auto& t = mesh.triangles[i];
    auto hit = intersect_triangle(ray, mesh.vertices[t[0]], mesh.vertices[t[1]],
                                  mesh.vertices[t[2]]);
    if (!hit) continue;
    hit->triangle = i;
    if (!best || closer(*hit, *best)) best = hit;
  }
  return best;
}

Ray ray_through(const scene::Camera& camera, double px, double py) {
  const auto [right, up, forward] = camera.basis();
  const double tan_half = std::tan(0.5 * camera.vertical_fov);
  const double aspect =
      static_cast<double>(camera.resolution.width) / camera.resolution.height;
  const double sx = (2.0 * px / camera.resolution.width - 1.0) * tan_half * aspect;
  const double sy = (1.0 - 2.0 * py / camera.resolution.height) * tan_half;
  return {camera.position, normalize(forward + right * sx + up * sy)};
}

Ray pixel_ray(const scene::Camera& camera, int x, int y) {
  return ray_through(camera, x + 0.5, y + 0.5);
}

std::optional<Vec2> project(const scene::Camera& camera, const Vec3& point) {
  const auto [right, up, forward] = camera.basis();
  const Vec3 d = point - camera.position;
  const double zc = dot(d, forward);
  if (zc <= 0.0) return std::nullopt;
  const double tan_half = std::tan(0.5 * camera.vertical_fov);
  const double aspect =
      static_cast<double>(camera.resolution.width) / camera.resolution.height;
  const double sx = dot(d, right) / zc / (tan_half * aspect);
  const double sy = dot(d, up) / zc / tan_half;
  return Vec2{(sx + 1.0) * 0.5 * camera.resolution.width,
              (1.0 - sy) * 0.5 * camera.resolution.height};
}

Vec3 hit_point(const scene::Camera& camera, int x, int y, double depth) {
  if (!std::isfinite(depth) || depth < 0.0) {
    fail(ErrorCode::kInvalidArgument, "hit_point: invalid depth at pixel (" + std::to_string(x) +
                                          "," + std::to_string(y) + ")");
  }
  const Ray ray = pixel_ray(camera, x, y);
  return ray.origin + ray.direction * depth;
}

Vec3 ViewBundle::surface_point(int x, int y) const {
  if (!foreground(x, y)) {
    fail(ErrorCode::kBackgroundClick, "pixel (" + std::to_string(x) + "," + std::to_string(y) +
                                          ") of view '" + view_id + "' is background");
  }
  return hit_point(camera, x, y, depth.at(x, y));
}

std::array<std::uint8_t, 3> material_color(int material_id) {
  static constexpr std::array<std::array<std::uint8_t, 3>, 12> kPalette{{
      {205, 55, 50},
      {60, 175, 75},
      {50, 95, 215},
      {230, 200, 40},
      {160, 70, 190},
      {40, 190, 200},
      {235, 130, 40},
      {150, 150, 150},
      {120, 80, 40},
      {240, 120, 170},
      {100, 130, 60},
      {30, 40, 90},
  }};
  if (material_id < 0) return {0, 0, 0};
  return kPalette[static_cast<std::size_t>(material_id) % kPalette.size()];
}

ViewBundle render_view(const scene::Mesh& mesh, const Bvh& bvh, const scene::Camera& camera,
                       const std::string& view_id) {
  camera.validate();
  const int w = camera.resolution.width;
  const int h = camera.resolution.height;
  ViewBundle out;
  out.view_id = view_id;
  out.camera = camera;
  out.rgb = Raster<std::uint8_t>(w, h, 3, 0);
  out.depth = Raster<float>(w, h, 1, std::numeric_limits<float>::infinity());
  out.material_id = Raster<std::int32_t>(w, h, 1, -1);

  parallel_for(0, static_cast<std::size_t>(h), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < w; ++x) {
      const Ray ray = pixel_ray(camera, x, y);
      const auto hit = bvh.intersect(ray);
      if (!hit) continue;
      const int mat = mesh.material_ids[hit->triangle];
      out.depth.at(x, y) = static_cast<float>(hit->t);
      out.material_id.at(x, y) = mat;
      const double lambert =
          std::max(0.2, std::abs(dot(mesh.face_normal(hit->triangle), ray.direction)));
      const auto base = material_color(mat);
      for (int c = 0; c < 3; ++c) {
        out.rgb.at(x, y, c) = static_cast<std::uint8_t>(std::lround(base[c] * lambert));
      }
    }
  });
  return out;
}

std::vector<ViewBundle> render_views(const scene::Mesh& mesh, const Bvh& bvh,
                                     const scene::ViewManifest& manifest) {
  std::vector<ViewBundle> bundles;
  bundles.reserve(manifest.views.size());
  for (const auto& v : manifest.views) bundles.push_back(render_view(mesh, bvh, v.camera, v.id));
  return bundles;
}

}  // namespace matlift::render
