#pragma once

#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "matlift/lift.hpp"
#include "matlift/oracle.hpp"
#include "matlift/render.hpp"
#include "matlift/scene.hpp"

namespace matlift::lift {

/// Mesh, its BVH and the manifest of views used for lifting.
struct Scene {
  std::shared_ptr<const scene::Mesh> mesh;
  std::shared_ptr<const render::Bvh> bvh;
  scene::ViewManifest manifest;

  static Scene create(scene::Mesh mesh, scene::ViewManifest manifest);
  Aabb bounds() const { return mesh->bounds(); }
};

struct SelectionConfig {
  SelectionParams params;
  IvfParams ivf;
  bool duplicate_click_frame = true;
  int stride = 1;
  std::uint64_t noise_seed = 0;  // part of the index cache key
};

struct SelectionTimings {
  double render_ms = 0.0;
  double oracle_ms = 0.0;
  double backproject_ms = 0.0;
  double index_build_ms = 0.0;
  double total_ms = 0.0;
};

/// Immutable outcome of one click: the lifted cloud and its index.
struct SelectionResult {
  oracle::Click click;
  scene::Camera click_camera;
  bool click_in_manifest = true;
  Vec3 click_point;
  std::shared_ptr<const SimilarityCloud> cloud;
  IvfIndex index;
  SelectionTimings timings;
  std::vector<std::string> trajectory;  // oracle sequence, click view first
  std::uint64_t cache_key = 0;
  std::uint64_t generation = 0;  // unique per installed result
};

/// One interactive selection: click, threshold and the cached cloud/index.
/// A new click rebuilds the index; parameter changes only re-threshold.
/// select() calls are serialized; reads may run concurrently with them.
class SelectionSession {
 public:
  SelectionSession(Scene scene, std::shared_ptr<const oracle::SimilarityOracle> oracle,
                   SelectionConfig config = {});

  /// Lifts the selection for `click`. `click_camera` places the click on a
  /// view outside the manifest (e.g. an orbit viewpoint). Returns false when
  /// the cached result for the same key was reused.
  bool select(const oracle::Click& click,
              const std::optional<scene::Camera>& click_camera = std::nullopt);

  /// Installs a previously lifted cloud (e.g. loaded from disk) and rebuilds its index.
  void restore(const oracle::Click& click, const scene::Camera& click_camera,
               SimilarityCloud cloud);

  void set_params(const SelectionParams& params);
  SelectionParams params() const;

  bool has_selection() const;
  std::shared_ptr<const SelectionResult> result() const;

  Reconstruction reconstruct(const scene::Camera& camera, const std::string& view_id = {}) const;
  Vote vote_at(const Vec3& point) const;

  const Scene& scene() const { return scene_; }
  const SelectionConfig& config() const { return config_; }
  const oracle::SimilarityOracle& oracle() const { return *oracle_; }
  /// Number of k-means clusterings run; a click whose cloud positions match the
  /// previous result reuses that clustering.
  std::size_t index_builds() const;

  /// Manifest views rendered so far (manifest order); similarity holds the
  /// maps of the latest selection.
  const std::vector<render::ViewBundle>& bundles() const { return bundles_; }
  void ensure_rendered();

 private:
  std::uint64_t cache_key(const oracle::Click& click,
                          const std::optional<scene::Camera>& camera) const;
  std::shared_ptr<const NeighborField> neighbor_field(
      const std::shared_ptr<const SelectionResult>& result, const scene::Camera& camera,
      const SelectionParams& params, const std::string& view_id) const;

  Scene scene_;
  std::shared_ptr<const oracle::SimilarityOracle> oracle_;
  SelectionConfig config_;

  std::mutex select_mutex_;
  std::vector<render::ViewBundle> bundles_;
  double pending_render_ms_ = 0.0;

  mutable std::mutex state_mutex_;
  std::shared_ptr<const SelectionResult> result_;
  SelectionParams params_;
  std::size_t index_builds_ = 0;
  std::uint64_t next_generation_ = 1;

  struct CachedField {
    std::uint64_t generation;
    std::shared_ptr<const NeighborField> field;
  };
  mutable std::mutex cache_mutex_;
  mutable std::list<CachedField> field_cache_;
};

}  // namespace matlift::lift
