#include "matlift/segment.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>

#include "matlift/error.hpp"
#include "matlift/evaluation.hpp"
#include "matlift/metrics.hpp"
#include "matlift/parallel.hpp"
#include "matlift/raster_io.hpp"

namespace matlift::segment {

namespace {

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

// D65 reference white, Y normalized to 1.
constexpr double kXn = 0.95047;
constexpr double kYn = 1.0;
constexpr double kZn = 1.08883;

}  // namespace

LabColor rgb_to_lab(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
  const double r = srgb_to_linear(r8 / 255.0);
  const double g = srgb_to_linear(g8 / 255.0);
  const double b = srgb_to_linear(b8 / 255.0);
  const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
  const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
  const double fx = lab_f(x / kXn);
  const double fy = lab_f(y / kYn);
  const double fz = lab_f(z / kZn);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

int histogram_bin(const LabColor& lab) {
  const int l = std::clamp(static_cast<int>(std::floor(lab.L / 25.0)), 0, kLBins - 1);
  const int a = std::clamp(static_cast<int>(std::floor((lab.a + 128.0) / 16.0)), 0, kABins - 1);
  const int b = std::clamp(static_cast<int>(std::floor((lab.b + 128.0) / 16.0)), 0, kABins - 1);
  return (l * kABins + a) * kABins + b;
}

std::vector<ColorMode> color_modes(std::span<const render::ViewBundle> bundles) {
  std::vector<std::vector<PixelRef>> bins(kHistogramBins);
  for (std::uint32_t v = 0; v < bundles.size(); ++v) {
    const auto& b = bundles[v];
    for (int y = 0; y < b.height(); ++y) {
      for (int x = 0; x < b.width(); ++x) {
        if (!b.foreground(x, y)) continue;
        const auto lab = rgb_to_lab(b.rgb.at(x, y, 0), b.rgb.at(x, y, 1), b.rgb.at(x, y, 2));
        bins[histogram_bin(lab)].push_back({v, x, y});
      }
    }
  }
  std::vector<ColorMode> modes;
  for (int i = 0; i < kHistogramBins; ++i) {
    if (!bins[i].empty()) modes.push_back({i, std::move(bins[i])});
  }
  return modes;
}

std::vector<int> allocate_clicks(std::span<const std::size_t> areas, int total) {
  if (total < 1) fail(ErrorCode::kInvalidArgument, "allocate_clicks: total must be >= 1");
  const double sum = std::accumulate(areas.begin(), areas.end(), 0.0);
  if (areas.empty() || sum <= 0.0) fail(ErrorCode::kEmptyInput, "allocate_clicks: no area");

  const std::size_t n = areas.size();
  std::vector<int> alloc(n);
  std::vector<double> remainder(n);
  int assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double quota = total * static_cast<double>(areas[i]) / sum;
    alloc[i] = static_cast<int>(std::floor(quota));
    remainder[i] = quota - alloc[i];
    assigned += alloc[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
    return areas[a] > areas[b];
  });
  for (std::size_t j = 0; assigned < total; ++j, ++assigned) ++alloc[order[j % n]];

  std::vector<std::size_t> by_area(n);
  std::iota(by_area.begin(), by_area.end(), 0);
  std::stable_sort(by_area.begin(), by_area.end(),
                   [&](std::size_t a, std::size_t b) { return areas[a] > areas[b]; });
  for (auto i : by_area) {
    if (areas[i] == 0 || alloc[i] > 0) continue;
    const auto donor = std::max_element(alloc.begin(), alloc.end());
    if (*donor <= 1) break;
    --*donor;
    alloc[i] = 1;
  }
  return alloc;
}

std::vector<oracle::Click> propose_clicks(std::span<const render::ViewBundle> bundles, int total,
                                          std::uint64_t seed) {
  const auto modes = color_modes(bundles);
  if (modes.empty()) fail(ErrorCode::kEmptyInput, "propose_clicks: no foreground pixels");
  std::vector<std::size_t> areas;
  for (const auto& m : modes) areas.push_back(m.area());
  const auto alloc = allocate_clicks(areas, total);

  std::mt19937_64 rng(seed);
  std::vector<oracle::Click> clicks;
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const auto& px = modes[m].pixels;
    const std::size_t n = alloc[m];
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t lo = s * px.size() / n;
      const std::size_t hi = std::max(lo + 1, (s + 1) * px.size() / n);
      std::uniform_int_distribution<std::size_t> pick(lo, hi - 1);
      const auto& p = px[pick(rng)];
      clicks.push_back({bundles[p.view].view_id, p.x, p.y, oracle::Polarity::kPositive});
    }
  }
  return clicks;
}

MergeMatrix merge_matrix(std::span<const std::vector<BinaryMask>> masks) {
  MergeMatrix m;
  m.size = masks.size();
  m.values.assign(m.size * m.size, 1.0);
  for (std::size_t i = 0; i < m.size; ++i) {
    for (std::size_t j = i + 1; j < m.size; ++j) {
      const double v = metrics::pooled_iou(masks[i], masks[j]);
      m.values[i * m.size + j] = v;
      m.values[j * m.size + i] = v;
    }
  }
  return m;
}

std::vector<ClickGroup> merge_selections(std::span<const std::vector<BinaryMask>> masks,
                                         double tau) {
  if (masks.empty()) fail(ErrorCode::kEmptyInput, "merge_selections: no masks");
  for (const auto& set : masks) {
    if (set.size() != masks[0].size()) {
      fail(ErrorCode::kInvalidArgument, "merge_selections: mask sets cover different views");
    }
    for (std::size_t v = 0; v < set.size(); ++v) {
      if (!set[v].same_shape(masks[0][v])) {
        fail(ErrorCode::kInvalidArgument, "merge_selections: mask resolutions differ");
      }
    }
  }
  const auto matrix = merge_matrix(masks);
  const std::size_t n = masks.size();
  std::vector<ClickGroup> groups(n);
  std::vector<bool> alive(n, true);
  for (std::size_t i = 0; i < n; ++i) {
    groups[i].representative = i;
    groups[i].members = {i};
    for (const auto& m : masks[i]) groups[i].area += m.count();
  }

  // The survivor keeps its own mask, so its matrix row stays valid after a merge.
  for (;;) {
    double best = -1.0;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (alive[j] && matrix.at(i, j) > best) {
          best = matrix.at(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    if (best < tau) break;
    const bool keep_i = groups[bi].area >= groups[bj].area;
    auto& survivor = groups[keep_i ? bi : bj];
    auto& absorbed = groups[keep_i ? bj : bi];
    survivor.members.insert(survivor.members.end(), absorbed.members.begin(), absorbed.members.end());
    std::sort(survivor.members.begin(), survivor.members.end());
    alive[keep_i ? bj : bi] = false;
  }

  std::vector<ClickGroup> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (alive[i]) out.push_back(std::move(groups[i]));
  }
  return out;
}

std::array<std::uint8_t, 3> group_color(int group) { return render::material_color(group); }

namespace {

std::int32_t best_group(std::span<const lift::Neighbor> nn, const std::vector<SegmentGroup>& groups,
                        double threshold) {
  if (nn.empty()) return kUnknownLabel;
  std::int32_t label = kUnknownLabel;
  double best = -1.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& values = groups[g].cloud->values;
    double sum = 0.0;
    for (const auto& n : nn) sum += values[n.id];
    const double mean = sum / static_cast<double>(nn.size());
    if (mean > best) {
      best = mean;
      label = static_cast<std::int32_t>(g);
    }
  }
  return best >= threshold ? label : kUnknownLabel;
}

}  // namespace

std::int32_t SegmentationResult::label_point(const Point3f& point) const {
  if (!index) fail(ErrorCode::kConflict, "label_point: empty segmentation");
  std::vector<lift::Neighbor> nn;
  lift::find_neighbors(*index, point, params, nn);
  return best_group(nn, groups, params.threshold);
}

Raster<std::int32_t> SegmentationResult::label_view(const render::Bvh& bvh,
                                                    const scene::Camera& camera) const {
  if (!index) fail(ErrorCode::kConflict, "label_view: empty segmentation");
  camera.validate();
  const int w = camera.resolution.width;
  const int h = camera.resolution.height;
  Raster<std::int32_t> labels(w, h, 1, kUnknownLabel);
  parallel_for(0, static_cast<std::size_t>(h), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    std::vector<lift::Neighbor> nn;
    for (int x = 0; x < w; ++x) {
      const Ray ray = render::pixel_ray(camera, x, y);
      const auto hit = bvh.intersect(ray);
      if (!hit) continue;
      lift::find_neighbors(*index, to_point3f(ray.origin + ray.direction * hit->t), params, nn);
      labels.at(x, y) = best_group(nn, groups, params.threshold);
    }
  });
  return labels;
}

nlohmann::json SegmentationResult::to_json() const {
  auto click_json = [](const oracle::Click& c) {
    return nlohmann::json{{"view_id", c.view_id}, {"x", c.x}, {"y", c.y}};
  };
  nlohmann::json out;
  out["clicks"] = nlohmann::json::array();
  for (const auto& c : clicks) out["clicks"].push_back(click_json(c));
  out["groups"] = nlohmann::json::array();
  for (const auto& g : groups) {
    out["groups"].push_back({{"id", g.id},
                             {"representative_click", click_json(g.representative)},
                             {"color", {g.color[0], g.color[1], g.color[2]}},
                             {"members", g.members}});
  }
  const auto unknown = std::count(point_labels.begin(), point_labels.end(), kUnknownLabel);
  out["assignment"] = {{"file", "labels.bin"},
                       {"count", point_labels.size()},
                       {"unknown", unknown},
                       {"unknown_label", kUnknownLabel}};
  return out;
}

SegmentationResult segment_object(lift::SelectionSession& session, const SegmentParams& params) {
  if (params.total_clicks < 1) fail(ErrorCode::kInvalidArgument, "segment: total_clicks must be >= 1");
  if (params.eval_views < 1) fail(ErrorCode::kInvalidArgument, "segment: eval_views must be >= 1");
  if (!(params.tau >= 0.0 && params.tau <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "segment: tau must be in [0, 1]");
  }
  session.ensure_rendered();
  const auto& scene = session.scene();
  SegmentationResult result;
  result.params = session.params();
  result.clicks = propose_clicks(session.bundles(), params.total_clicks, params.seed);

  std::vector<std::shared_ptr<const lift::SimilarityCloud>> clouds;
  for (const auto& click : result.clicks) {
    session.select(click);
    const auto r = session.result();
    if (!result.index) result.index = r->index;
    if (r->cloud->points != result.index->cloud().points) {
      fail(ErrorCode::kConflict, "segment: click clouds do not share positions");
    }
    clouds.push_back(r->cloud);
  }

  // Neighbour ids per evaluation pixel are the same for every click.
  const auto resolution = scene.manifest.views.front().camera.resolution;
  const auto cams = metrics::random_novel_views(scene, params.eval_views, params.seed, resolution);
  std::vector<std::vector<BinaryMask>> masks(clouds.size());
  for (const auto& cam : cams) {
    const auto field = lift::gather_neighbor_ids(*result.index, *scene.bvh, cam, result.params);
    for (std::size_t c = 0; c < clouds.size(); ++c) {
      masks[c].push_back(lift::vote_field(field, clouds[c]->values, result.params.threshold).mask);
    }
  }

  const auto merged = merge_selections(masks, params.tau);
  for (std::size_t g = 0; g < merged.size(); ++g) {
    SegmentGroup group;
    group.id = static_cast<int>(g);
    group.representative = result.clicks[merged[g].representative];
    group.color = group_color(group.id);
    group.members = merged[g].members;
    group.cloud = clouds[merged[g].representative];
    result.groups.push_back(std::move(group));
  }

  const auto& cloud = result.index->cloud();
  result.point_labels.assign(cloud.size(), kUnknownLabel);
  parallel_for(0, cloud.size(), [&](std::size_t i) {
    thread_local std::vector<lift::Neighbor> nn;
    lift::find_neighbors(*result.index, cloud.points[i], result.params, nn);
    result.point_labels[i] = best_group(nn, result.groups, result.params.threshold);
  });
  return result;
}

void save_labels(std::span<const std::int32_t> labels, const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes(12 + labels.size() * 4);
  std::memcpy(bytes.data(), "MSL1", 4);
  const std::uint64_t count = labels.size();
  for (int i = 0; i < 8; ++i) bytes[4 + i] = static_cast<std::uint8_t>(count >> (8 * i));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto u = static_cast<std::uint32_t>(labels[i]);
    for (int b = 0; b < 4; ++b) bytes[12 + i * 4 + b] = static_cast<std::uint8_t>(u >> (8 * b));
  }
  io::write_file(path, bytes.data(), bytes.size());
}

std::vector<std::int32_t> load_labels(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "MSL1", 4) != 0) {
    fail(ErrorCode::kParse, path.string() + ": not a label file");
  }
  std::uint64_t count = 0;
  for (int i = 0; i < 8; ++i) count |= static_cast<std::uint64_t>(bytes[4 + i]) << (8 * i);
  if (bytes.size() != 12 + count * 4) fail(ErrorCode::kParse, path.string() + ": truncated label file");
  std::vector<std::int32_t> labels(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t u = 0;
    for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(bytes[12 + i * 4 + b]) << (8 * b);
    labels[i] = static_cast<std::int32_t>(u);
  }
  return labels;
}

}  // namespace matlift::segment
