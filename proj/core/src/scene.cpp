#include "matlift/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "matlift/error.hpp"

namespace matlift::scene {

using nlohmann::json;

Aabb Mesh::bounds() const {
  Aabb box;
  for (const auto& v : vertices) box.extend(v);
  return box;
}

Vec3 Mesh::face_normal(std::size_t tri) const {
  const auto& t = triangles[tri];
  const Vec3& a = vertices[t[0]];
  return normalize(cross(vertices[t[1]] - a, vertices[t[2]] - a));
}

void Mesh::validate() const {
  if (material_ids.size() != triangles.size()) {
    fail(ErrorCode::kInvalidArgument, "mesh: one material id per triangle required");
  }
  for (std::size_t i = 0; i < triangles.size(); ++i) {
    for (auto idx : triangles[i]) {
      if (idx >= vertices.size()) {
        fail(ErrorCode::kIndexOutOfRange,
             "mesh: triangle " + std::to_string(i) + " index out of range");
      }
    }
    if (material_ids[i] < 0 || material_ids[i] >= material_count) {
      fail(ErrorCode::kInvalidArgument,
           "mesh: triangle " + std::to_string(i) + " material id out of range");
    }
  }
  if (!uvs.empty() && uvs.size() != vertices.size()) {
    fail(ErrorCode::kInvalidArgument, "mesh: uv count must match vertex count");
  }
}

std::array<Vec3, 3> Camera::basis() const {
  const Vec3 f = forward();
  Vec3 r = cross(f, up);
  if (norm(r) < 1e-9) {
    // Looking along `up`; any perpendicular reference works.
    const Vec3 alt = std::abs(f.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    r = cross(f, alt);
  }
  r = normalize(r);
  const Vec3 u = cross(r, f);
  return {r, u, f};
}

void Camera::validate() const {
  if (position == look_at) fail(ErrorCode::kInvalidArgument, "camera: position equals look_at");
  if (!(vertical_fov > 0.0 && vertical_fov < std::numbers::pi)) {
    fail(ErrorCode::kInvalidArgument, "camera: vertical fov must be in (0, pi)");
  }
  if (resolution.width < 1 || resolution.height < 1) {
    fail(ErrorCode::kInvalidArgument, "camera: resolution must be at least 1x1");
  }
}

Camera make_camera(const Vec3& position, const Vec3& look_at, double vertical_fov,
                   Resolution resolution) {
  Camera cam;
  cam.position = position;
  cam.look_at = look_at;
  const Vec3 f = normalize(look_at - position);
  cam.up = std::abs(dot(f, Vec3{0, 0, 1})) > 0.999 ? Vec3{0, 1, 0} : Vec3{0, 0, 1};
  cam.vertical_fov = vertical_fov;
  cam.resolution = resolution;
  cam.validate();
  return cam;
}

const View* ViewManifest::find(const std::string& id) const {
  for (const auto& v : views) {
    if (v.id == id) return &v;
  }
  return nullptr;
}

namespace {

class Fnv1a {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      hash_ ^= p[i];
      hash_ *= 1099511628211ULL;
    }
  }
  void value(double d) { bytes(&d, sizeof d); }
  void value(int i) { bytes(&i, sizeof i); }
  void value(const Vec3& v) {
    value(v.x);
    value(v.y);
    value(v.z);
  }
  std::uint64_t digest() const { return hash_; }

 private:
  std::uint64_t hash_ = 14695981039346656037ULL;
};

Vec3 vec_from_json(const json& j, const char* key) {
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 3) {
    fail(ErrorCode::kParse, std::string("manifest: field '") + key + "' must be a 3-array");
  }
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

json vec_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

}  // namespace

std::uint64_t ViewManifest::fingerprint() const {
  Fnv1a h;
  for (const auto& v : views) {
    h.bytes(v.id.data(), v.id.size());
    h.value(v.camera.position);
    h.value(v.camera.look_at);
    h.value(v.camera.up);
    h.value(v.camera.vertical_fov);
    h.value(v.camera.resolution.width);
    h.value(v.camera.resolution.height);
  }
  return h.digest();
}

void ViewManifest::validate() const {
  std::set<std::string> ids;
  for (const auto& v : views) {
    if (!ids.insert(v.id).second) {
      fail(ErrorCode::kInvalidArgument, "manifest: duplicate view id '" + v.id + "'");
    }
    v.camera.validate();
  }
}

std::string manifest_to_json(const ViewManifest& manifest) {
  json arr = json::array();
  for (const auto& v : manifest.views) {
    arr.push_back({{"id", v.id},
                   {"position", vec_to_json(v.camera.position)},
                   {"look_at", vec_to_json(v.camera.look_at)},
                   {"up", vec_to_json(v.camera.up)},
                   {"fov_deg", v.camera.vertical_fov * 180.0 / std::numbers::pi},
                   {"width", v.camera.resolution.width},
                   {"height", v.camera.resolution.height}});
  }
  return arr.dump(2);
}

ViewManifest manifest_from_json(const std::string& text) {
  json arr;
  try {
    arr = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("manifest: ") + e.what());
  }
  if (!arr.is_array()) fail(ErrorCode::kParse, "manifest: expected a JSON array");
  ViewManifest manifest;
  try {
    for (const auto& item : arr) {
      View v;
      v.id = item.at("id").get<std::string>();
      v.camera.position = vec_from_json(item, "position");
      v.camera.look_at = vec_from_json(item, "look_at");
      v.camera.up = normalize(vec_from_json(item, "up"));
      v.camera.vertical_fov = item.at("fov_deg").get<double>() * std::numbers::pi / 180.0;
      v.camera.resolution = {item.at("width").get<int>(), item.at("height").get<int>()};
      manifest.views.push_back(std::move(v));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("manifest: ") + e.what());
  }
  manifest.validate();
  return manifest;
}

ViewManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return manifest_from_json(ss.str());
}

void save_manifest(const ViewManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write manifest " + path.string());
  out << manifest_to_json(manifest) << '\n';
}

std::vector<Camera> fibonacci_cameras(int n, const Vec3& center, double radius, double fov,
                                      Resolution resolution) {
  if (n < 1) fail(ErrorCode::kEmptyInput, "fibonacci_cameras: n must be at least 1");
  if (!(radius > 0.0)) fail(ErrorCode::kInvalidArgument, "fibonacci_cameras: radius must be > 0");
  const double golden_turn = 2.0 * std::numbers::pi * (1.0 - 1.0 / std::numbers::phi);
  std::vector<Camera> cams;
  cams.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double az = golden_turn * i;
    const Vec3 dir{r * std::cos(az), r * std::sin(az), z};
    cams.push_back(make_camera(center + dir * radius, center, fov, resolution));
  }
  return cams;
}

double spatio_angular_distance(const Camera& a, const Camera& b, double diag) {
  const double positional = diag > 0.0 ? distance(a.position, b.position) / diag : 0.0;
  return positional + angle_between(a.forward(), b.forward()) / std::numbers::pi;
}

std::vector<std::size_t> sort_camera_order(const Camera& initial,
                                           const std::vector<Camera>& others) {
  Aabb box;
  box.extend(initial.position);
  for (const auto& c : others) box.extend(c.position);
  const double diag = box.diagonal();

  std::vector<std::size_t> remaining(others.size());
  for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i] = i;

  std::vector<std::size_t> order;
  order.reserve(others.size());
  const Camera* current = &initial;
  while (!remaining.empty()) {
    std::size_t best = 0;
    double best_d = INFINITY;
    // `remaining` stays in input order, so strict < keeps the earliest on ties.
    for (std::size_t j = 0; j < remaining.size(); ++j) {
      const double d = spatio_angular_distance(*current, others[remaining[j]], diag);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    order.push_back(remaining[best]);
    current = &others[remaining[best]];
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return order;
}

std::vector<Camera> sort_cameras(const Camera& initial, const std::vector<Camera>& others) {
  std::vector<Camera> sorted{initial};
  for (auto i : sort_camera_order(initial, others)) sorted.push_back(others[i]);
  return sorted;
}

std::optional<TrajectoryKind> parse_trajectory_kind(const std::string& name) {
  if (name == "zoom_in") return TrajectoryKind::kZoomIn;
  if (name == "zoom_out") return TrajectoryKind::kZoomOut;
  if (name == "turntable") return TrajectoryKind::kTurntable;
  if (name == "fly_over") return TrajectoryKind::kFlyOver;
  return std::nullopt;
}

namespace {

Vec3 spherical(double radius, double azimuth, double elevation) {
  return {radius * std::cos(elevation) * std::cos(azimuth),
          radius * std::cos(elevation) * std::sin(azimuth), radius * std::sin(elevation)};
}

}  // namespace

std::vector<Camera> trajectory_cameras(TrajectoryKind kind, int n_frames,
                                       const TrajectoryParams& p) {
  if (n_frames < 2) fail(ErrorCode::kInvalidArgument, "trajectory_cameras: need at least 2 frames");
  std::vector<Camera> cams;
  cams.reserve(n_frames);
  const double last = n_frames - 1;
  for (int i = 0; i < n_frames; ++i) {
    const double t = i / last;
    Vec3 offset;
    switch (kind) {
      case TrajectoryKind::kZoomIn:
        offset = spherical(p.radius_start + t * (p.radius_end - p.radius_start), p.azimuth,
                           p.elevation);
        break;
      case TrajectoryKind::kZoomOut:
        offset = spherical(p.radius_end + t * (p.radius_start - p.radius_end), p.azimuth,
                           p.elevation);
        break;
      case TrajectoryKind::kTurntable:
        offset = spherical(p.radius_start, 2.0 * std::numbers::pi * i / n_frames, p.elevation);
        break;
      case TrajectoryKind::kFlyOver:
        offset = spherical(p.radius_start, p.azimuth,
                           p.min_elevation + t * (p.max_elevation - p.min_elevation));
        break;
    }
    cams.push_back(make_camera(p.center + offset, p.center, p.fov, p.resolution));
  }
  return cams;
}

ViewManifest subsample_views(const ViewManifest& manifest, double fraction) {
  if (manifest.views.empty()) fail(ErrorCode::kEmptyInput, "subsample_views: empty manifest");
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "subsample_views: fraction must be in (0, 1]");
  }
  const std::size_t n = manifest.views.size();
  // Guard against 0.2 * 100 = 20.000000000000004 style round-up.
  const auto keep = static_cast<std::size_t>(std::ceil(fraction * n - 1e-9));
  ViewManifest out;
  out.asset_path = manifest.asset_path;
  for (std::size_t i = 0; i < keep; ++i) {
    out.views.push_back(manifest.views[i * n / keep]);
  }
  return out;
}

double framing_distance(const Mesh& mesh, double fov) {
  const double radius = 0.5 * mesh.bounds().diagonal();
  return 1.15 * radius / std::sin(0.5 * fov);
}

ViewManifest fibonacci_manifest(const Mesh& mesh, int n, Resolution resolution, double fov) {
  const Aabb box = mesh.bounds();
  const auto cams = fibonacci_cameras(n, box.center(), framing_distance(mesh, fov), fov, resolution);
  ViewManifest manifest;
  for (std::size_t i = 0; i < cams.size(); ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "fib_%03zu", i);
    manifest.views.push_back({id, cams[i]});
  }
  return manifest;
}

}  // namespace matlift::scene
