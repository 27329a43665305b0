#include "matlift/evaluation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "matlift/error.hpp"
#include "matlift/oracle.hpp"

namespace matlift::metrics {

namespace {

scene::Resolution default_resolution(const lift::Scene& scene,
                                     const std::optional<scene::Resolution>& requested) {
  if (requested) return *requested;
  return scene.manifest.views.front().camera.resolution;
}

double mean_view_distance(const lift::Scene& scene) {
  const Vec3 c = scene.bounds().center();
  double sum = 0.0;
  for (const auto& v : scene.manifest.views) sum += distance(v.camera.position, c);
  return sum / static_cast<double>(scene.manifest.views.size());
}

Vec3 random_direction(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> az(0.0, 2.0 * std::numbers::pi);
  const double z = u(rng);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  const double phi = az(rng);
  return {r * std::cos(phi), r * std::sin(phi), z};
}

// Samples clicks for `material` over the manifest views in seeded-random order.
std::vector<oracle::Click> sample_material_clicks(const std::vector<render::ViewBundle>& bundles,
                                                  int material, int n_clicks,
                                                  std::mt19937_64& rng) {
  std::vector<std::size_t> order(bundles.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> selectable;
  for (auto i : order) {
    try {
      std::mt19937_64 probe(0);
      oracle::sample_click(bundles[i].material_id, material, probe, bundles[i].view_id);
      selectable.push_back(i);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kUnselectable) throw;
    }
  }
  std::vector<oracle::Click> clicks;
  if (selectable.empty()) return clicks;
  for (int c = 0; c < n_clicks; ++c) {
    const auto& b = bundles[selectable[static_cast<std::size_t>(c) % selectable.size()]];
    clicks.push_back(oracle::sample_click(b.material_id, material, rng, b.view_id));
  }
  return clicks;
}

}  // namespace

std::vector<scene::Camera> random_novel_views(const lift::Scene& scene, int n, std::uint64_t seed,
                                              scene::Resolution resolution) {
  std::mt19937_64 rng(seed ^ 0x6E6F76656CULL);
  const Vec3 center = scene.bounds().center();
  const double radius = mean_view_distance(scene);
  const double fov = scene.manifest.views.front().camera.vertical_fov;
  std::vector<scene::Camera> cams;
  cams.reserve(n);
  for (int i = 0; i < n; ++i) {
    cams.push_back(scene::make_camera(center + random_direction(rng) * radius, center, fov, resolution));
  }
  return cams;
}

BinaryMask ground_truth_mask(const lift::Scene& scene, const scene::Camera& camera, int material) {
  const auto bundle = render::render_view(*scene.mesh, *scene.bvh, camera);
  BinaryMask mask(bundle.width(), bundle.height());
  for (std::size_t i = 0; i < mask.pixels.data().size(); ++i) {
    mask.pixels[i] = bundle.material_id[i] == material ? 1 : 0;
  }
  return mask;
}

std::vector<MaterialAccuracy> eval_accuracy(const SessionFactory& factory, const lift::Scene& scene,
                                            const AccuracyOptions& options,
                                            std::vector<std::string>* warnings) {
  if (options.n_views < 1 || options.n_clicks < 1) {
    fail(ErrorCode::kInvalidArgument, "eval_accuracy: n_views and n_clicks must be >= 1");
  }
  const auto resolution = default_resolution(scene, options.resolution);
  const auto views = random_novel_views(scene, options.n_views, options.seed, resolution);
  std::vector<render::ViewBundle> truth;
  truth.reserve(views.size());
  for (const auto& cam : views) truth.push_back(render::render_view(*scene.mesh, *scene.bvh, cam));

  auto session = factory();
  session->ensure_rendered();

  struct MaterialClicks {
    int material;
    std::vector<std::vector<float>> values;  // per click
  };
  std::vector<MaterialClicks> lifted;
  std::optional<lift::IvfIndex> geometry;
  bool shared_positions = true;
  for (int m = 0; m < scene.mesh->material_count; ++m) {
    std::mt19937_64 rng(options.seed * 1000003ULL + static_cast<std::uint64_t>(m));
    const auto clicks = sample_material_clicks(session->bundles(), m, options.n_clicks, rng);
    if (clicks.empty()) {
      if (warnings) warnings->push_back("material " + std::to_string(m) + " is unselectable; skipped");
      continue;
    }
    MaterialClicks mc{m, {}};
    for (const auto& click : clicks) {
      session->select(click);
      const auto r = session->result();
      if (!geometry) geometry = r->index;
      shared_positions = shared_positions && r->cloud->points == geometry->cloud().points;
      mc.values.push_back(r->cloud->values);
    }
    lifted.push_back(std::move(mc));
  }
  if (!shared_positions) {
    fail(ErrorCode::kConflict, "eval_accuracy: click clouds do not share positions");
  }

  // Per material and click: sums of per-view IoU, F1, precision, recall.
  std::vector<std::vector<std::array<double, 4>>> sums(lifted.size());
  for (std::size_t i = 0; i < lifted.size(); ++i) sums[i].assign(lifted[i].values.size(), {});
  const auto params = session->params();
  for (std::size_t v = 0; v < views.size() && geometry; ++v) {
    const auto field = lift::gather_neighbor_ids(*geometry, *scene.bvh, views[v], params);
    for (std::size_t i = 0; i < lifted.size(); ++i) {
      BinaryMask gt(truth[v].width(), truth[v].height());
      for (std::size_t p = 0; p < gt.pixels.data().size(); ++p) {
        gt.pixels[p] = truth[v].material_id[p] == lifted[i].material ? 1 : 0;
      }
      for (std::size_t c = 0; c < lifted[i].values.size(); ++c) {
        const auto rec = lift::vote_field(field, lifted[i].values[c], params.threshold);
        const Confusion conf = confusion(rec.mask, gt);
        const auto prf = precision_recall_f1(conf);
        auto& s = sums[i][c];
        s[0] += iou(conf);
        s[1] += prf.f1;
        s[2] += prf.precision;
        s[3] += prf.recall;
      }
    }
  }

  std::vector<MaterialAccuracy> out;
  const double n = static_cast<double>(views.size());
  for (std::size_t i = 0; i < lifted.size(); ++i) {
    std::vector<double> ious, f1s, ps, rs;
    for (const auto& s : sums[i]) {
      ious.push_back(s[0] / n);
      f1s.push_back(s[1] / n);
      ps.push_back(s[2] / n);
      rs.push_back(s[3] / n);
    }
    MaterialAccuracy acc;
    acc.material = lifted[i].material;
    if (static_cast<std::size_t>(acc.material) < scene.mesh->material_names.size()) {
      acc.name = scene.mesh->material_names[acc.material];
    }
    acc.miou = summarize(ious);
    acc.f1 = summarize(f1s);
    acc.precision = summarize(ps);
    acc.recall = summarize(rs);
    out.push_back(acc);
  }
  return out;
}

double eval_consistency(const lift::SelectionSession& session, const ConsistencyOptions& options) {
  const auto result = session.result();
  if (!result) fail(ErrorCode::kConflict, "eval_consistency: session has no click");
  const auto& scene = session.scene();
  const Vec3 point = result->click_point;
  const double tol = options.occlusion_tolerance * scene.bounds().diagonal();
  const Vec3 center = scene.bounds().center();
  const double radius = mean_view_distance(scene);
  const auto& ref = result->click_camera;

  std::mt19937_64 rng(options.seed ^ 0x636F6E73ULL);
  int accepted = 0;
  double miss = 0.0;
  for (int attempt = 0; attempt < options.max_attempts && accepted < options.n_views; ++attempt) {
    const auto cam = scene::make_camera(center + random_direction(rng) * radius, center,
                                        ref.vertical_fov, ref.resolution);
    const auto px = render::project(cam, point);
    if (!px || px->x < 0.0 || px->y < 0.0 || px->x >= cam.resolution.width ||
        px->y >= cam.resolution.height) {
      continue;
    }
    const Vec3 to_point = point - cam.position;
    const double dist = norm(to_point);
    if (scene.bvh->occluded(Ray{cam.position, to_point / dist}, dist - tol)) continue;

    ++accepted;
    miss += session.vote_at(point).selected ? 0.0 : 1.0;
  }
  if (accepted < options.n_views) {
    fail(ErrorCode::kUnselectable, "eval_consistency: found only " + std::to_string(accepted) +
                                       " unoccluded views in " +
                                       std::to_string(options.max_attempts) + " attempts");
  }
  return 100.0 * miss / accepted;
}

double eval_robustness(const SessionFactory& factory, const lift::Scene& scene, int material,
                       const RobustnessOptions& options) {
  if (options.n_clicks < 2) fail(ErrorCode::kInvalidArgument, "eval_robustness: need >= 2 clicks");
  auto session = factory();
  session->ensure_rendered();
  const auto& bundles = session->bundles();

  std::mt19937_64 rng(options.seed ^ 0x726F6275ULL);
  std::vector<std::size_t> order(bundles.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  const render::ViewBundle* view = nullptr;
  for (auto i : order) {
    try {
      std::mt19937_64 probe(0);
      oracle::sample_click(bundles[i].material_id, material, probe, bundles[i].view_id);
      view = &bundles[i];
      break;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kUnselectable) throw;
    }
  }
  if (!view) {
    fail(ErrorCode::kUnselectable, "eval_robustness: material " + std::to_string(material) +
                                       " is unselectable in every view");
  }
  std::vector<oracle::Click> clicks;
  for (int c = 0; c < options.n_clicks; ++c) {
    clicks.push_back(oracle::sample_click(view->material_id, material, rng, view->view_id));
  }

  const auto resolution = view->camera.resolution;
  const auto cams = random_novel_views(scene, options.n_views, options.seed, resolution);
  std::vector<BinaryMask> foreground;
  for (const auto& cam : cams) {
    const auto b = render::render_view(*scene.mesh, *scene.bvh, cam);
    BinaryMask fg(b.width(), b.height());
    for (std::size_t i = 0; i < fg.pixels.data().size(); ++i) fg.pixels[i] = b.material_id[i] >= 0;
    foreground.push_back(std::move(fg));
  }

  std::vector<std::vector<float>> values;
  std::optional<lift::IvfIndex> geometry;
  for (const auto& click : clicks) {
    session->select(click);
    const auto r = session->result();
    if (!geometry) geometry = r->index;
    if (r->cloud->points != geometry->cloud().points) {
      fail(ErrorCode::kConflict, "eval_robustness: click clouds do not share positions");
    }
    values.push_back(r->cloud->values);
  }

  const auto params = session->params();
  const std::size_t n = values.size();
  std::vector<std::size_t> differ(n * n, 0);
  std::size_t total = 0;
  for (std::size_t v = 0; v < cams.size(); ++v) {
    const auto field = lift::gather_neighbor_ids(*geometry, *scene.bvh, cams[v], params);
    std::vector<BinaryMask> masks;
    for (const auto& vals : values) masks.push_back(lift::vote_field(field, vals, params.threshold).mask);
    const auto& fg = foreground[v].pixels.data();
    for (std::size_t i = 0; i < fg.size(); ++i) {
      if (!fg[i]) continue;
      ++total;
      for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
          differ[a * n + b] += (masks[a].pixels[i] != 0) != (masks[b].pixels[i] != 0);
        }
      }
    }
  }

  double sum = 0.0;
  int pairs = 0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      sum += total == 0 ? 0.0 : 100.0 * static_cast<double>(differ[a * n + b]) / static_cast<double>(total);
      ++pairs;
    }
  }
  return sum / pairs;
}

}  // namespace matlift::metrics
