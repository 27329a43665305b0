#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "matlift/cloud.hpp"
#include "matlift/geometry.hpp"

namespace matlift::lift {

struct Neighbor {
  std::uint32_t id = 0;
  float distance = 0.0f;  // Euclidean

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Squared L2 in float, evaluated in a fixed order so every search path agrees.
inline float squared_distance(const Point3f& a, const Point3f& b) {
  const float dx = a[0] - b[0];
  const float dy = a[1] - b[1];
  const float dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

struct IvfParams {
  int n_clusters = 100;
  std::uint64_t seed = 0;
  int max_iterations = 25;
  double tolerance = 1e-4;          // relative inertia change
  int training_points_per_cluster = 256;
};

/// Inverted-file index over cloud positions: k-means coarse quantizer, points
/// grouped per list, exact L2 inside the probed lists. Each list additionally
/// carries a small kd-tree so exact in-list search stays sub-linear.
///
/// Immutable after build and safe to query concurrently. Copies share the
/// clustered structure.
class IvfIndex {
 public:
  static IvfIndex build(std::shared_ptr<const SimilarityCloud> cloud, const IvfParams& params = {});

  /// k nearest among the `n_probe` lists with the nearest centroids, ordered by
  /// (distance, id). Returns fewer than k when the probed lists hold fewer points.
  std::vector<Neighbor> search(const Point3f& query, int k, int n_probe) const;
  void search(const Point3f& query, int k, int n_probe, std::vector<Neighbor>& out) const;

  /// Same clustering over a cloud with identical positions but new values.
  IvfIndex with_values(std::shared_ptr<const SimilarityCloud> cloud) const;

  std::size_t cluster_count() const;
  std::span<const Point3f> centroids() const;
  std::span<const std::uint32_t> list(std::size_t cluster) const;
  const SimilarityCloud& cloud() const { return *cloud_; }
  std::shared_ptr<const SimilarityCloud> shared_cloud() const { return cloud_; }
  double build_ms() const;
  int iterations() const;

 private:
  struct Structure;
  IvfIndex(std::shared_ptr<const Structure> s, std::shared_ptr<const SimilarityCloud> c)
      : structure_(std::move(s)), cloud_(std::move(c)) {}

  std::shared_ptr<const Structure> structure_;
  std::shared_ptr<const SimilarityCloud> cloud_;
};

/// Exhaustive scan; ordered by (distance, id).
std::vector<Neighbor> brute_force_knn(const SimilarityCloud& cloud, const Point3f& query, int k);

}  // namespace matlift::lift
