#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "matlift/cloud.hpp"
#include "matlift/ivf_index.hpp"
#include "matlift/raster.hpp"
#include "matlift/render.hpp"

namespace matlift::lift {

struct SelectionParams {
  int k = 9;               // odd, so a strict majority is always decided
  double threshold = 0.5;
  int n_probe = 5;
  bool exact = false;      // brute-force search instead of probing

  void validate() const;
  friend bool operator==(const SelectionParams&, const SelectionParams&) = default;
};

/// One point per foreground pixel (every `stride`-th row and column) at the
/// pixel's surface hit, carrying that pixel's similarity. Bundles must carry
/// similarity rasters.
SimilarityCloud backproject(std::span<const render::ViewBundle> bundles, int stride = 1);

struct Vote {
  bool selected = false;
  float mean_similarity = 0.0f;
};

/// Selected iff strictly more than k/2 neighbours reach the threshold.
Vote vote_values(std::span<const float> neighbor_values, double threshold);
Vote vote(const IvfIndex& index, const Point3f& point, const SelectionParams& params);

/// Neighbour lookup honouring params.exact / n_probe.
void find_neighbors(const IvfIndex& index, const Point3f& point, const SelectionParams& params,
                    std::vector<Neighbor>& out);

/// Per-pixel neighbour similarities for one camera; re-thresholding this is
/// cheap, so sessions cache it.
struct NeighborField {
  scene::Camera camera;
  std::string view_id;
  int k = 0;
  int n_probe = 0;
  bool exact = false;
  Raster<float> values;            // k channels, padded with NaN when fewer found
  Raster<std::uint8_t> foreground;
  Raster<float> depth;             // +inf on background
};

NeighborField gather_neighbors(const IvfIndex& index, const render::Bvh& bvh,
                               const scene::Camera& camera, const SelectionParams& params,
                               const std::string& view_id = {});

struct Reconstruction {
  BinaryMask mask;
  Raster<float> heatmap;  // mean neighbour similarity, 0 on background
};

Reconstruction threshold_field(const NeighborField& field, double threshold);

/// Neighbour ids per pixel for one camera. Clicks whose clouds share positions
/// share these ids, so many selections can be scored from one kNN pass.
struct NeighborIdField {
  scene::Camera camera;
  int k = 0;
  std::vector<std::uint32_t> ids;     // k slots per pixel
  std::vector<std::uint16_t> counts;  // 0 on background

  int width() const { return camera.resolution.width; }
  int height() const { return camera.resolution.height; }
};

NeighborIdField gather_neighbor_ids(const IvfIndex& index, const render::Bvh& bvh,
                                    const scene::Camera& camera, const SelectionParams& params);

/// Votes every pixel of `field` with per-point `values` of a cloud sharing the
/// index positions.
Reconstruction vote_field(const NeighborIdField& field, std::span<const float> values,
                          double threshold, const std::string& view_id = {});

/// Ray-casts every pixel and votes at the hit point.
Reconstruction reconstruct_view(const IvfIndex& index, const scene::Mesh& mesh,
                                const render::Bvh& bvh, const scene::Camera& camera,
                                const SelectionParams& params, const std::string& view_id = {});

}  // namespace matlift::lift
