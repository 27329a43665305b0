#include "matlift/session.hpp"

#include <chrono>

#include "matlift/error.hpp"

namespace matlift::lift {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

constexpr std::size_t kFieldCacheSize = 8;

void mix(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
}

template <typename T>
void mix_value(std::uint64_t& h, const T& v) {
  mix(h, &v, sizeof v);
}

void mix_camera(std::uint64_t& h, const scene::Camera& c) {
  for (const Vec3* v : {&c.position, &c.look_at, &c.up}) {
    mix_value(h, v->x);
    mix_value(h, v->y);
    mix_value(h, v->z);
  }
  mix_value(h, c.vertical_fov);
  mix_value(h, c.resolution.width);
  mix_value(h, c.resolution.height);
}

}  // namespace

Scene Scene::create(scene::Mesh mesh, scene::ViewManifest manifest) {
  mesh.validate();
  manifest.validate();
  auto m = std::make_shared<const scene::Mesh>(std::move(mesh));
  auto bvh = std::make_shared<const render::Bvh>(*m);
  return Scene{std::move(m), std::move(bvh), std::move(manifest)};
}

SelectionSession::SelectionSession(Scene scene,
                                   std::shared_ptr<const oracle::SimilarityOracle> oracle,
                                   SelectionConfig config)
    : scene_(std::move(scene)), oracle_(std::move(oracle)), config_(config),
      params_(config.params) {
  if (!scene_.mesh || !scene_.bvh) fail(ErrorCode::kInvalidArgument, "session: scene without mesh");
  if (!oracle_) fail(ErrorCode::kInvalidArgument, "session: no oracle");
  if (scene_.manifest.views.empty()) fail(ErrorCode::kEmptyInput, "session: empty manifest");
  config_.params.validate();
  if (config_.stride < 1) fail(ErrorCode::kInvalidArgument, "session: stride must be >= 1");
}

std::uint64_t SelectionSession::cache_key(const oracle::Click& click,
                                          const std::optional<scene::Camera>& camera) const {
  std::uint64_t h = 14695981039346656037ULL;
  mix(h, click.view_id.data(), click.view_id.size());
  mix_value(h, click.x);
  mix_value(h, click.y);
  mix_value(h, click.polarity);
  mix_value(h, config_.noise_seed);
  mix_value(h, scene_.manifest.fingerprint());
  if (camera) mix_camera(h, *camera);
  return h;
}

void SelectionSession::ensure_rendered() {
  if (!bundles_.empty()) return;
  const auto t0 = Clock::now();
  bundles_ = render::render_views(*scene_.mesh, *scene_.bvh, scene_.manifest);
  pending_render_ms_ += ms_since(t0);
}

bool SelectionSession::select(const oracle::Click& click,
                              const std::optional<scene::Camera>& click_camera) {
  std::lock_guard select_lock(select_mutex_);
  const auto t_start = Clock::now();

  // Validate the click with a single ray before any rendering.
  const scene::View* manifest_view = scene_.manifest.find(click.view_id);
  if (click_camera && manifest_view) {
    fail(ErrorCode::kInvalidArgument, "select: click view id '" + click.view_id +
                                          "' collides with a manifest view");
  }
  if (!click_camera && !manifest_view) {
    fail(ErrorCode::kNotFound, "select: unknown view '" + click.view_id + "'");
  }
  const scene::Camera camera = click_camera ? *click_camera : manifest_view->camera;
  camera.validate();
  if (click.x < 0 || click.y < 0 || click.x >= camera.resolution.width ||
      click.y >= camera.resolution.height) {
    fail(ErrorCode::kInvalidArgument, "select: click (" + std::to_string(click.x) + "," +
                                          std::to_string(click.y) + ") outside the view");
  }
  const Ray click_ray = render::pixel_ray(camera, click.x, click.y);
  const auto click_hit = scene_.bvh->intersect(click_ray);
  if (!click_hit) {
    fail(ErrorCode::kBackgroundClick, "select: click (" + std::to_string(click.x) + "," +
                                          std::to_string(click.y) + ") hits background");
  }

  const std::uint64_t key = cache_key(click, click_camera);
  {
    std::lock_guard lock(state_mutex_);
    if (result_ && result_->cache_key == key) return false;
  }

  // Render the manifest once per session, plus the off-manifest click view.
  ensure_rendered();
  auto t0 = Clock::now();
  std::optional<render::ViewBundle> extra;
  if (click_camera) extra = render::render_view(*scene_.mesh, *scene_.bvh, camera, click.view_id);
  SelectionTimings timings;
  timings.render_ms = pending_render_ms_ + ms_since(t0);
  pending_render_ms_ = 0.0;

  // Trajectory: click view first, then greedy spatio-angular ordering.
  std::vector<const render::ViewBundle*> all;
  for (const auto& b : bundles_) all.push_back(&b);
  if (extra) all.push_back(&*extra);
  const render::ViewBundle* clicked = nullptr;
  std::vector<const render::ViewBundle*> others;
  std::vector<scene::Camera> other_cameras;
  for (const auto* b : all) {
    if (b->view_id == click.view_id) {
      clicked = b;
    } else {
      others.push_back(b);
      other_cameras.push_back(b->camera);
    }
  }
  std::vector<const render::ViewBundle*> sequence{clicked};
  for (auto i : scene::sort_camera_order(clicked->camera, other_cameras)) sequence.push_back(others[i]);

  oracle::OracleRequest request;
  request.click = click;
  request.duplicated = config_.duplicate_click_frame;
  for (const auto* b : sequence) request.frames.push_back({b->view_id, b, false});
  if (request.duplicated) request.frames = oracle::duplicate_click_frame(request.frames, click.view_id);

  t0 = Clock::now();
  auto maps = oracle_->query(request);
  timings.oracle_ms = ms_since(t0);

  // Attach maps by view id; the output skips the conditioning copy.
  std::size_t next = 0;
  for (const auto& f : request.frames) {
    if (f.conditioning_only) continue;
    auto* b = const_cast<render::ViewBundle*>(f.bundle);
    b->similarity = std::move(maps[next++]);
  }

  // Cloud order: manifest views, then the off-manifest click view.
  t0 = Clock::now();
  auto cloud = std::make_shared<SimilarityCloud>(backproject(bundles_, config_.stride));
  if (extra) {
    const auto extra_cloud = backproject(std::span<const render::ViewBundle>(&*extra, 1), config_.stride);
    const auto base = static_cast<std::uint32_t>(cloud->view_ids.size());
    cloud->view_ids.push_back(extra->view_id);
    cloud->points.insert(cloud->points.end(), extra_cloud.points.begin(), extra_cloud.points.end());
    cloud->values.insert(cloud->values.end(), extra_cloud.values.begin(), extra_cloud.values.end());
    for (auto v : extra_cloud.view_index) cloud->view_index.push_back(base + v);
  }
  timings.backproject_ms = ms_since(t0);

  // Clicks on manifest views share cloud positions, so the clustering of the
  // previous result is reused when the positions match exactly.
  t0 = Clock::now();
  const auto previous = result();
  const bool reuse = previous && previous->cloud->points == cloud->points;
  IvfIndex index = reuse ? previous->index.with_values(cloud) : IvfIndex::build(cloud, config_.ivf);
  timings.index_build_ms = ms_since(t0);
  timings.total_ms = ms_since(t_start);

  auto result = std::make_shared<SelectionResult>(SelectionResult{
      click, camera, !click_camera.has_value(), click_ray.origin + click_ray.direction * click_hit->t,
      cloud, std::move(index), timings, {}, key, 0});
  for (const auto* b : sequence) result->trajectory.push_back(b->view_id);

  std::lock_guard lock(state_mutex_);
  result->generation = next_generation_++;
  result_ = std::move(result);
  if (!reuse) ++index_builds_;
  return true;
}

void SelectionSession::restore(const oracle::Click& click, const scene::Camera& click_camera,
                               SimilarityCloud cloud) {
  std::lock_guard select_lock(select_mutex_);
  const auto t0 = Clock::now();
  auto shared = std::make_shared<SimilarityCloud>(std::move(cloud));
  IvfIndex index = IvfIndex::build(shared, config_.ivf);
  const Ray ray = render::pixel_ray(click_camera, click.x, click.y);
  const auto hit = scene_.bvh->intersect(ray);
  if (!hit) fail(ErrorCode::kBackgroundClick, "restore: stored click hits background");
  const bool in_manifest = scene_.manifest.find(click.view_id) != nullptr;
  SelectionTimings timings;
  timings.index_build_ms = ms_since(t0);
  timings.total_ms = timings.index_build_ms;
  auto result = std::make_shared<SelectionResult>(SelectionResult{
      click, click_camera, in_manifest, ray.origin + ray.direction * hit->t, shared,
      std::move(index), timings, {},
      cache_key(click, in_manifest ? std::nullopt : std::optional(click_camera)), 0});
  std::lock_guard lock(state_mutex_);
  result->generation = next_generation_++;
  result_ = std::move(result);
  ++index_builds_;
}

void SelectionSession::set_params(const SelectionParams& params) {
  params.validate();
  std::lock_guard lock(state_mutex_);
  params_ = params;
}

SelectionParams SelectionSession::params() const {
  std::lock_guard lock(state_mutex_);
  return params_;
}

bool SelectionSession::has_selection() const {
  std::lock_guard lock(state_mutex_);
  return result_ != nullptr;
}

std::shared_ptr<const SelectionResult> SelectionSession::result() const {
  std::lock_guard lock(state_mutex_);
  return result_;
}

std::size_t SelectionSession::index_builds() const {
  std::lock_guard lock(state_mutex_);
  return index_builds_;
}

std::shared_ptr<const NeighborField> SelectionSession::neighbor_field(
    const std::shared_ptr<const SelectionResult>& result, const scene::Camera& camera,
    const SelectionParams& params, const std::string& view_id) const {
  {
    std::lock_guard lock(cache_mutex_);
    for (auto it = field_cache_.begin(); it != field_cache_.end(); ++it) {
      const auto& f = *it->field;
      if (it->generation == result->generation && f.camera == camera && f.k == params.k &&
          f.n_probe == params.n_probe && f.exact == params.exact) {
        field_cache_.splice(field_cache_.begin(), field_cache_, it);
        return field_cache_.front().field;
      }
    }
  }
  auto field = std::make_shared<const NeighborField>(
      gather_neighbors(result->index, *scene_.bvh, camera, params, view_id));
  std::lock_guard lock(cache_mutex_);
  field_cache_.push_front({result->generation, field});
  if (field_cache_.size() > kFieldCacheSize) field_cache_.pop_back();
  return field;
}

Reconstruction SelectionSession::reconstruct(const scene::Camera& camera,
                                             const std::string& view_id) const {
  const auto current = result();
  if (!current) fail(ErrorCode::kConflict, "reconstruct: no selection yet");
  const SelectionParams p = params();
  auto rec = threshold_field(*neighbor_field(current, camera, p, view_id), p.threshold);
  rec.mask.view_id = view_id;
  return rec;
}

Vote SelectionSession::vote_at(const Vec3& point) const {
  const auto current = result();
  if (!current) fail(ErrorCode::kConflict, "vote: no selection yet");
  return vote(current->index, to_point3f(point), params());
}

}  // namespace matlift::lift
