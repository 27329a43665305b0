#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "matlift/geometry.hpp"

namespace matlift::scene {

struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
  std::vector<int> material_ids;  // one per triangle
  std::vector<Vec2> uvs;          // empty, or one per vertex
  int material_count = 0;
  std::vector<std::string> material_names;  // sidecar table, indexed by material id

  bool has_uv() const { return !uvs.empty(); }
  Aabb bounds() const;
  Vec3 face_normal(std::size_t tri) const;

  /// Throws kInvalidArgument when an index, material id or uv count is inconsistent.
  void validate() const;
};

/// Wavefront OBJ subset: `v`, `vt`, `f` (fan-triangulated) and `usemtl`.
/// Material ids follow the order in which `usemtl` groups first appear.
Mesh load_mesh(const std::filesystem::path& path);
Mesh parse_obj(std::istream& in, const std::string& source_name = "<stream>");
void save_obj(const Mesh& mesh, const std::filesystem::path& path);

struct Resolution {
  int width = 256;
  int height = 256;
  friend bool operator==(const Resolution&, const Resolution&) = default;
};

struct Camera {
  Vec3 position;
  Vec3 look_at;
  Vec3 up{0.0, 0.0, 1.0};
  double vertical_fov = 0.6981317007977318;  // 40 degrees
  Resolution resolution;

  Vec3 forward() const { return normalize(look_at - position); }

  /// Orthonormal (right, true_up, forward) frame; falls back to another
  /// reference axis when `up` is parallel to the viewing direction.
  std::array<Vec3, 3> basis() const;

  void validate() const;

  friend bool operator==(const Camera&, const Camera&) = default;
};

Camera make_camera(const Vec3& position, const Vec3& look_at, double vertical_fov,
                   Resolution resolution);

struct View {
  std::string id;
  Camera camera;
};

struct ViewManifest {
  std::vector<View> views;
  std::string asset_path;

  std::size_t size() const { return views.size(); }
  const View* find(const std::string& id) const;
  /// Stable FNV-1a hash over ids and camera parameters; used as a cache key.
  std::uint64_t fingerprint() const;
  void validate() const;
};

/// JSON array of {id, position[3], look_at[3], up[3], fov_deg, width, height}.
ViewManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const ViewManifest& manifest, const std::filesystem::path& path);
std::string manifest_to_json(const ViewManifest& manifest);
ViewManifest manifest_from_json(const std::string& text);

/// Cameras on a sphere following the offset spherical Fibonacci lattice,
/// z_i = 1 - (2i+1)/n, azimuth_i = 2*pi*i*(1 - 1/phi); all look at `center`.
std::vector<Camera> fibonacci_cameras(int n, const Vec3& center, double radius, double fov,
                                      Resolution resolution);

/// Spatio-angular distance: |p_a - p_b| / diag + angle(f_a, f_b) / pi.
double spatio_angular_distance(const Camera& a, const Camera& b, double diag);

/// Greedy nearest-neighbour chain starting at `initial`; ties go to the
/// earlier camera in `others`.
std::vector<Camera> sort_cameras(const Camera& initial, const std::vector<Camera>& others);

/// Index form of sort_cameras: returns the visiting order of `others`.
std::vector<std::size_t> sort_camera_order(const Camera& initial,
                                           const std::vector<Camera>& others);

enum class TrajectoryKind { kZoomIn, kZoomOut, kTurntable, kFlyOver };

std::optional<TrajectoryKind> parse_trajectory_kind(const std::string& name);

struct TrajectoryParams {
  Vec3 center;
  double radius_start = 4.0;  // zoom: start radius; others: fixed radius
  double radius_end = 2.0;    // zoom: end radius
  double elevation = 0.3;     // radians; turntable and zoom
  double azimuth = 0.0;       // radians; fly-over and zoom
  double min_elevation = 0.05;
  double max_elevation = 1.45;
  double fov = 0.6981317007977318;
  Resolution resolution;
};

std::vector<Camera> trajectory_cameras(TrajectoryKind kind, int n_frames,
                                       const TrajectoryParams& params);

/// Keeps ceil(fraction * n) views picked by uniform stride over the input order.
ViewManifest subsample_views(const ViewManifest& manifest, double fraction);

/// Manifest of `n` Fibonacci views named fib_000.. framing the mesh bounds.
ViewManifest fibonacci_manifest(const Mesh& mesh, int n, Resolution resolution,
                                double fov = 0.6981317007977318);

/// Distance at which a sphere around the mesh bounds fills the vertical fov
/// with some margin.
double framing_distance(const Mesh& mesh, double fov);

}  // namespace matlift::scene
