#include "matlift/service/session_manager.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "matlift/error.hpp"
#include "matlift/postprocess.hpp"
#include "matlift/raster_io.hpp"
#include "matlift/render.hpp"
#include "matlift/service/session_store.hpp"

namespace matlift::service {

namespace {

using nlohmann::json;

json params_json(const lift::SelectionParams& p) {
  return {{"k", p.k}, {"threshold", p.threshold}, {"n_probe", p.n_probe}, {"exact", p.exact}};
}

json timings_json(const lift::SelectionTimings& t) {
  return {{"render_ms", t.render_ms},
          {"oracle_ms", t.oracle_ms},
          {"backproject_ms", t.backproject_ms},
          {"index_build_ms", t.index_build_ms},
          {"total_ms", t.total_ms}};
}

json segmentation_json(const segment::SegmentationResult& seg) {
  json groups = json::array();
  for (const auto& g : seg.groups) {
    groups.push_back({{"id", g.id},
                      {"representative_click", click_to_json(g.representative)},
                      {"color", {g.color[0], g.color[1], g.color[2]}},
                      {"size", g.members.size()}});
  }
  return {{"groups", groups}, {"clicks", seg.clicks.size()}};
}

}  // namespace

std::string status_name(SelectionStatus s) {
  switch (s) {
    case SelectionStatus::kIdle: return "idle";
    case SelectionStatus::kRunning: return "running";
    case SelectionStatus::kReady: return "ready";
    case SelectionStatus::kFailed: return "failed";
  }
  return "unknown";
}

scene::Camera orbit_camera(const lift::Scene& scene, const OrbitView& view,
                           scene::Resolution resolution, double fov_deg) {
  if (!std::isfinite(view.yaw_deg) || !std::isfinite(view.pitch_deg) || !std::isfinite(view.dist)) {
    fail(ErrorCode::kInvalidArgument, "orbit view: non-finite parameter");
  }
  if (view.pitch_deg < -90.0 || view.pitch_deg > 90.0) {
    fail(ErrorCode::kInvalidArgument, "orbit view: pitch must be in [-90, 90]");
  }
  const double fov = fov_deg * std::numbers::pi / 180.0;
  const double dist = view.dist > 0.0 ? view.dist : scene::framing_distance(*scene.mesh, fov);
  const double yaw = view.yaw_deg * std::numbers::pi / 180.0;
  const double pitch = view.pitch_deg * std::numbers::pi / 180.0;
  const Vec3 c = scene.bounds().center();
  const Vec3 dir{std::cos(pitch) * std::cos(yaw), std::cos(pitch) * std::sin(yaw), std::sin(pitch)};
  return scene::make_camera(c + dir * dist, c, fov, resolution);
}

ServiceSession::ServiceSession(std::string id, std::string asset_id, EngineConfig config,
                               std::unique_ptr<lift::SelectionSession> session)
    : id_(std::move(id)), asset_id_(std::move(asset_id)), config_(std::move(config)),
      session_(std::move(session)) {
  if (session_->has_selection()) status_ = SelectionStatus::kReady;
}

ServiceSession::~ServiceSession() {
  if (worker_.joinable()) worker_.join();
}

SelectionStatus ServiceSession::status() const {
  std::lock_guard lock(mutex_);
  return status_;
}

std::string ServiceSession::error() const {
  std::lock_guard lock(mutex_);
  return error_;
}

std::shared_ptr<const segment::SegmentationResult> ServiceSession::segmentation() const {
  std::lock_guard lock(mutex_);
  return segmentation_;
}

json ServiceSession::describe() const {
  json out{{"session_id", id_},
           {"asset_id", asset_id_},
           {"status", status_name(status())},
           {"params", params_json(session_->params())},
           {"views", session_->scene().manifest.size()},
           {"oracle_calls", session_->oracle().call_count()},
           {"index_builds", session_->index_builds()}};
  if (const auto e = error(); !e.empty()) out["error"] = e;
  if (const auto r = session_->result()) {
    out["click"] = click_to_json(r->click);
    out["timing"] = timings_json(r->timings);
    out["cloud_points"] = r->cloud->size();
  }
  if (const auto seg = segmentation()) out["segmentation"] = segmentation_json(*seg);
  return out;
}

SessionManager::SessionManager(EngineConfig defaults, std::filesystem::path data_dir)
    : defaults_(std::move(defaults)), data_dir_(std::move(data_dir)) {
  defaults_.validate();
}

std::string SessionManager::next_id() {
  static thread_local std::mt19937_64 rng(std::random_device{}());
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%04llx%08llx", static_cast<unsigned long long>(++counter_ & 0xffff),
                static_cast<unsigned long long>(rng() & 0xffffffffULL));
  return buf;
}

std::string SessionManager::add(std::string asset_id, EngineConfig config,
                                std::unique_ptr<lift::SelectionSession> session) {
  std::unique_lock lock(mutex_);
  std::string id = next_id();
  sessions_[id] = std::make_shared<ServiceSession>(id, std::move(asset_id), std::move(config),
                                                   std::move(session));
  return id;
}

std::string SessionManager::create(const std::string& asset_id, const json& overrides) {
  EngineConfig config = defaults_;
  apply_overrides(config, overrides);
  const auto asset_dir = data_dir_.empty() ? std::filesystem::path() : data_dir_ / "assets";
  if (data_dir_.empty() && asset_id != "demo" && asset_id != "sphere") {
    fail(ErrorCode::kNotFound, "unknown asset '" + asset_id + "' (no data directory)");
  }
  auto mesh = load_asset(asset_id, asset_dir);
  auto manifest = default_manifest(mesh, config);
  manifest.asset_path = asset_id;
  auto scene = lift::Scene::create(std::move(mesh), std::move(manifest));
  auto session = std::make_unique<lift::SelectionSession>(std::move(scene), make_oracle(config),
                                                          config.selection);
  return add(asset_id, std::move(config), std::move(session));
}

std::string SessionManager::open(const std::filesystem::path& session_dir) {
  auto loaded = load_session_dir(session_dir);
  return add(std::move(loaded.asset_id), std::move(loaded.config), std::move(loaded.session));
}

std::shared_ptr<ServiceSession> SessionManager::get(const std::string& id) const {
  std::shared_lock lock(mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) fail(ErrorCode::kNotFound, "unknown session '" + id + "'");
  return it->second;
}

void SessionManager::click(const std::string& id, const ClickRequest& request) {
  auto s = get(id);
  const auto camera = orbit_camera(s->selection().scene(), request.view, s->config().resolution,
                                   s->config().fov_deg);
  if (request.x < 0 || request.y < 0 || request.x >= camera.resolution.width ||
      request.y >= camera.resolution.height) {
    fail(ErrorCode::kInvalidArgument, "click outside the view");
  }
  if (!s->selection().scene().bvh->intersect(render::pixel_ray(camera, request.x, request.y))) {
    fail(ErrorCode::kBackgroundClick, "click hits background");
  }
  bool expected = false;
  if (!s->busy_.compare_exchange_strong(expected, true)) {
    fail(ErrorCode::kConflict, "a selection is already in progress");
  }
  {
    std::lock_guard lock(s->mutex_);
    s->status_ = SelectionStatus::kRunning;
    s->error_.clear();
  }
  if (s->worker_.joinable()) s->worker_.join();
  const oracle::Click click{kOrbitViewId, request.x, request.y, request.polarity};
  // The worker is joined by ~ServiceSession, so a raw pointer stays valid.
  ServiceSession* raw = s.get();
  raw->worker_ = std::jthread([this, raw, click, camera] {
    try {
      raw->selection().select(click, camera);
      persist(*raw);
      std::lock_guard lock(raw->mutex_);
      raw->status_ = SelectionStatus::kReady;
    } catch (const std::exception& e) {
      std::lock_guard lock(raw->mutex_);
      raw->status_ = SelectionStatus::kFailed;
      raw->error_ = e.what();
    }
    raw->busy_ = false;
  });
}

bool SessionManager::wait(const std::string& id, std::chrono::milliseconds timeout) const {
  auto s = get(id);
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (s->busy()) {
    if (std::chrono::steady_clock::now() >= deadline) return false;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  return true;
}

void SessionManager::persist(const ServiceSession& s) const {
  if (data_dir_.empty()) return;
  write_session_dir(data_dir_ / "sessions" / s.id(), s.selection(), s.config(), s.asset_id(),
                    {.masks = false});
}

json SessionManager::set_params(const std::string& id, const json& patch) {
  auto s = get(id);
  if (!patch.is_object()) fail(ErrorCode::kInvalidArgument, "params patch must be an object");
  auto p = s->selection().params();
  for (const auto& [key, value] : patch.items()) {
    if (key == "threshold" && value.is_number()) {
      p.threshold = value.get<double>();
    } else if (key == "k" && value.is_number_integer()) {
      p.k = value.get<int>();
    } else if (key == "n_probe" && value.is_number_integer()) {
      p.n_probe = value.get<int>();
    } else if (key == "exact" && value.is_boolean()) {
      p.exact = value.get<bool>();
    } else {
      fail(ErrorCode::kInvalidArgument, "params: unknown or mistyped field '" + key + "'");
    }
  }
  s->selection().set_params(p);
  return params_json(p);
}

std::string SessionManager::render_png(const std::string& id, const OrbitView& view,
                                       Overlay overlay) const {
  auto s = get(id);
  const auto& scene = s->selection().scene();
  const auto camera = orbit_camera(scene, view, s->config().resolution, s->config().fov_deg);
  const auto bundle = render::render_view(*scene.mesh, *scene.bvh, camera);
  Raster<std::uint8_t> image = bundle.rgb;
  if ((overlay == Overlay::kMask || overlay == Overlay::kHeatmap) && s->selection().has_selection()) {
    const auto rec = s->selection().reconstruct(camera);
    image = overlay == Overlay::kMask ? composite_mask(image, rec.mask)
                                      : composite_heatmap(image, rec.heatmap, bundle.material_id);
  } else if (overlay == Overlay::kSegments) {
    if (const auto seg = s->segmentation()) {
      std::vector<std::array<std::uint8_t, 3>> colors;
      for (const auto& g : seg->groups) colors.push_back(g.color);
      image = composite_labels(image, seg->label_view(*scene.bvh, camera), colors);
    }
  }
  return io::encode_png(image);
}

json SessionManager::segment(const std::string& id, const segment::SegmentParams& params) {
  auto s = get(id);
  bool expected = false;
  if (!s->busy_.compare_exchange_strong(expected, true)) {
    fail(ErrorCode::kConflict, "a selection is already in progress");
  }
  try {
    // A separate session keeps the user's current selection intact.
    auto config = s->config().selection;
    config.params = s->selection().params();
    lift::SelectionSession worker(s->selection().scene(), make_oracle(s->config()), config);
    auto seg = std::make_shared<const segment::SegmentationResult>(segment::segment_object(worker, params));
    {
      std::lock_guard lock(s->mutex_);
      s->segmentation_ = seg;
    }
    s->busy_ = false;
    return segmentation_json(*seg);
  } catch (...) {
    s->busy_ = false;
    throw;
  }
}

ExportFile SessionManager::export_file(const std::string& id, const std::string& kind,
                                       const OrbitView& view) const {
  auto s = get(id);
  const auto& scene = s->selection().scene();
  if (kind == "cloud") {
    const auto r = s->selection().result();
    if (!r) fail(ErrorCode::kConflict, "no selection to export");
    const auto bytes = lift::encode_cloud(*r->cloud);
    return {"cloud.msc", "application/octet-stream", std::string(bytes.begin(), bytes.end())};
  }
  if (kind == "masks") {
    if (!s->selection().has_selection()) fail(ErrorCode::kConflict, "no selection to export");
    const auto camera = orbit_camera(scene, view, s->config().resolution, s->config().fov_deg);
    return {"mask.pgm", "image/x-portable-graymap",
            io::encode_pgm(io::mask_to_gray(s->selection().reconstruct(camera).mask))};
  }
  if (kind == "uv") {
    if (!scene.mesh->has_uv()) fail(ErrorCode::kInvalidArgument, "asset has no uv coordinates");
    std::vector<scene::Camera> cams;
    for (const auto& v : scene.manifest.views) cams.push_back(v.camera);
    const auto seg = s->segmentation();
    if (seg) {
      const auto map = render::bake_uv(*scene.mesh, *scene.bvh, cams,
                                       [&](const Vec3& p, std::uint32_t) {
                                         return static_cast<float>(seg->label_point(to_point3f(p)));
                                       },
                                       s->config().uv_resolution);
      Raster<std::int32_t> ids(map.width(), map.height(), 1, -1);
      for (std::size_t i = 0; i < ids.data().size(); ++i) {
        if (map.coverage[i]) ids[i] = static_cast<std::int32_t>(map.values[i]);
      }
      return {"uv_segments.pgm", "image/x-portable-graymap", io::encode_pgm(io::ids_to_gray(ids))};
    }
    if (!s->selection().has_selection()) fail(ErrorCode::kConflict, "nothing to bake");
    const auto map = render::bake_uv(*scene.mesh, *scene.bvh, cams,
                                     [&](const Vec3& p, std::uint32_t) {
                                       return s->selection().vote_at(p).selected ? 1.0f : 0.0f;
                                     },
                                     s->config().uv_resolution);
    BinaryMask mask(map.width(), map.height());
    for (std::size_t i = 0; i < mask.pixels.data().size(); ++i) mask.pixels[i] = map.values[i] > 0.5f;
    return {"uv_mask.pgm", "image/x-portable-graymap", io::encode_pgm(io::mask_to_gray(mask))};
  }
  fail(ErrorCode::kNotFound, "unknown export '" + kind + "'");
}

}  // namespace matlift::service
