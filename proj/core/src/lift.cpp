#include "matlift/lift.hpp"

#include <cmath>
#include <limits>

#include "matlift/error.hpp"
#include "matlift/parallel.hpp"

namespace matlift::lift {

void SelectionParams::validate() const {
  if (k < 1 || k % 2 == 0) {
    fail(ErrorCode::kInvalidArgument, "selection: k must be a positive odd number (got " +
                                          std::to_string(k) + ")");
  }
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "selection: threshold must be in [0, 1]");
  }
  if (n_probe < 1) fail(ErrorCode::kInvalidArgument, "selection: n_probe must be >= 1");
}

SimilarityCloud backproject(std::span<const render::ViewBundle> bundles, int stride) {
  if (stride < 1) fail(ErrorCode::kInvalidArgument, "backproject: stride must be >= 1");
  SimilarityCloud cloud;
  for (std::uint32_t v = 0; v < bundles.size(); ++v) {
    const auto& b = bundles[v];
    if (!b.similarity) {
      fail(ErrorCode::kInvalidArgument, "backproject: view '" + b.view_id + "' has no similarity");
    }
    if (!b.similarity->same_extent(b.depth) || !b.material_id.same_extent(b.depth)) {
      fail(ErrorCode::kInvalidArgument, "backproject: rasters of view '" + b.view_id +
                                            "' differ in size");
    }
    cloud.view_ids.push_back(b.view_id);
    for (int y = 0; y < b.height(); y += stride) {
      for (int x = 0; x < b.width(); x += stride) {
        if (!b.foreground(x, y)) continue;
        cloud.points.push_back(to_point3f(render::hit_point(b.camera, x, y, b.depth.at(x, y))));
        cloud.values.push_back(b.similarity->at(x, y));
        cloud.view_index.push_back(v);
      }
    }
  }
  return cloud;
}

Vote vote_values(std::span<const float> values, double threshold) {
  if (values.empty()) fail(ErrorCode::kEmptyInput, "vote: no neighbours");
  std::size_t passing = 0;
  double sum = 0.0;
  for (float v : values) {
    passing += v >= threshold;
    sum += v;
  }
  // passing > n/2  <=>  2*passing > n
  return {2 * passing > values.size(), static_cast<float>(sum / values.size())};
}

void find_neighbors(const IvfIndex& index, const Point3f& point, const SelectionParams& params,
                    std::vector<Neighbor>& out) {
  if (params.exact) {
    out = brute_force_knn(index.cloud(), point, params.k);
  } else {
    index.search(point, params.k, params.n_probe, out);
  }
}

Vote vote(const IvfIndex& index, const Point3f& point, const SelectionParams& params) {
  if (index.cloud().empty()) fail(ErrorCode::kEmptyInput, "vote: empty index");
  std::vector<Neighbor> nn;
  find_neighbors(index, point, params, nn);
  std::vector<float> values;
  values.reserve(nn.size());
  for (const auto& n : nn) values.push_back(index.cloud().values[n.id]);
  return vote_values(values, params.threshold);
}

NeighborField gather_neighbors(const IvfIndex& index, const render::Bvh& bvh,
                               const scene::Camera& camera, const SelectionParams& params,
                               const std::string& view_id) {
  params.validate();
  camera.validate();
  if (index.cloud().empty()) fail(ErrorCode::kEmptyInput, "reconstruct: empty index");
  const int w = camera.resolution.width;
  const int h = camera.resolution.height;
  NeighborField field;
  field.camera = camera;
  field.view_id = view_id;
  field.k = params.k;
  field.n_probe = params.n_probe;
  field.exact = params.exact;
  field.values = Raster<float>(w, h, params.k, std::numeric_limits<float>::quiet_NaN());
  field.foreground = Raster<std::uint8_t>(w, h, 1, 0);
  field.depth = Raster<float>(w, h, 1, std::numeric_limits<float>::infinity());
  const auto& values = index.cloud().values;

  parallel_for(0, static_cast<std::size_t>(h), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    std::vector<Neighbor> nn;
    for (int x = 0; x < w; ++x) {
      const Ray ray = render::pixel_ray(camera, x, y);
      const auto hit = bvh.intersect(ray);
      if (!hit) continue;
      field.foreground.at(x, y) = 1;
      field.depth.at(x, y) = static_cast<float>(hit->t);
      const Point3f p = to_point3f(ray.origin + ray.direction * hit->t);
      find_neighbors(index, p, params, nn);
      for (std::size_t j = 0; j < nn.size(); ++j) {
        field.values.at(x, y, static_cast<int>(j)) = values[nn[j].id];
      }
    }
  });
  return field;
}

Reconstruction threshold_field(const NeighborField& field, double threshold) {
  const int w = field.foreground.width();
  const int h = field.foreground.height();
  Reconstruction out{BinaryMask(w, h, field.view_id), Raster<float>(w, h, 1, 0.0f)};
  float buffer[256];
  std::vector<float> heap_buffer;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!field.foreground.at(x, y)) continue;
      std::size_t n = 0;
      float* vals = buffer;
      if (field.k > 256) {
        heap_buffer.resize(field.k);
        vals = heap_buffer.data();
      }
      for (int j = 0; j < field.k; ++j) {
        const float v = field.values.at(x, y, j);
        if (!std::isnan(v)) vals[n++] = v;
      }
      if (n == 0) continue;
      const Vote vt = vote_values({vals, n}, threshold);
      out.mask.set(x, y, vt.selected);
      out.heatmap.at(x, y) = vt.mean_similarity;
    }
  }
  return out;
}

NeighborIdField gather_neighbor_ids(const IvfIndex& index, const render::Bvh& bvh,
                                    const scene::Camera& camera, const SelectionParams& params) {
  params.validate();
  camera.validate();
  if (index.cloud().empty()) fail(ErrorCode::kEmptyInput, "reconstruct: empty index");
  if (params.k > 65535) fail(ErrorCode::kInvalidArgument, "reconstruct: k too large");
  NeighborIdField field;
  field.camera = camera;
  field.k = params.k;
  const int w = camera.resolution.width;
  const int h = camera.resolution.height;
  field.ids.assign(static_cast<std::size_t>(w) * h * params.k, 0);
  field.counts.assign(static_cast<std::size_t>(w) * h, 0);
  parallel_for(0, static_cast<std::size_t>(h), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    std::vector<Neighbor> nn;
    for (int x = 0; x < w; ++x) {
      const Ray ray = render::pixel_ray(camera, x, y);
      const auto hit = bvh.intersect(ray);
      if (!hit) continue;
      find_neighbors(index, to_point3f(ray.origin + ray.direction * hit->t), params, nn);
      const std::size_t p = row * w + x;
      field.counts[p] = static_cast<std::uint16_t>(nn.size());
      for (std::size_t j = 0; j < nn.size(); ++j) field.ids[p * params.k + j] = nn[j].id;
    }
  });
  return field;
}

Reconstruction vote_field(const NeighborIdField& field, std::span<const float> values,
                          double threshold, const std::string& view_id) {
  const int w = field.width();
  const int h = field.height();
  Reconstruction out{BinaryMask(w, h, view_id), Raster<float>(w, h, 1, 0.0f)};
  std::vector<float> vals(field.k);
  for (std::size_t p = 0; p < field.counts.size(); ++p) {
    const std::size_t n = field.counts[p];
    if (n == 0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      const auto id = field.ids[p * field.k + j];
      if (id >= values.size()) fail(ErrorCode::kIndexOutOfRange, "vote_field: value id out of range");
      vals[j] = values[id];
    }
    const Vote v = vote_values({vals.data(), n}, threshold);
    out.mask.pixels[p] = v.selected;
    out.heatmap[p] = v.mean_similarity;
  }
  return out;
}

Reconstruction reconstruct_view(const IvfIndex& index, const scene::Mesh& /*mesh*/,
                                const render::Bvh& bvh, const scene::Camera& camera,
                                const SelectionParams& params, const std::string& view_id) {
  return threshold_field(gather_neighbors(index, bvh, camera, params, view_id), params.threshold);
}

}  // namespace matlift::lift
