#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "matlift/metrics.hpp"
#include "matlift/session.hpp"

namespace matlift::metrics {

using SessionFactory = std::function<std::unique_ptr<lift::SelectionSession>()>;

/// Cameras on the framing sphere of the scene at seeded-random directions,
/// all looking at the scene centre.
std::vector<scene::Camera> random_novel_views(const lift::Scene& scene, int n, std::uint64_t seed,
                                              scene::Resolution resolution);

/// Ground-truth mask of `material` for a camera.
BinaryMask ground_truth_mask(const lift::Scene& scene, const scene::Camera& camera, int material);

struct AccuracyOptions {
  int n_views = 50;
  int n_clicks = 5;
  std::uint64_t seed = 0;
  std::optional<scene::Resolution> resolution;  // default: first manifest view
};

/// Per material: sample clicks on manifest views, lift each, reconstruct the
/// novel views and score against ground-truth masks. Unselectable materials
/// are skipped with a warning.
std::vector<MaterialAccuracy> eval_accuracy(const SessionFactory& factory, const lift::Scene& scene,
                                            const AccuracyOptions& options,
                                            std::vector<std::string>* warnings = nullptr);

struct ConsistencyOptions {
  int n_views = 50;
  std::uint64_t seed = 0;
  int max_attempts = 10000;
  double occlusion_tolerance = 1e-4;  // fraction of the scene diagonal
};

/// 100 * mean |selected - 1| at the clicked 3D point over novel views in which
/// that point is unoccluded. Lower is better; 0 means perfectly consistent.
double eval_consistency(const lift::SelectionSession& session, const ConsistencyOptions& options);

struct RobustnessOptions {
  int n_clicks = 5;
  int n_views = 50;
  std::uint64_t seed = 0;
};

/// Average pairwise Hamming distance (x100) between the reconstructions of
/// n_clicks clicks on one material, all sampled in one seeded-random view.
/// Distances are measured over object-foreground pixels of the novel views.
double eval_robustness(const SessionFactory& factory, const lift::Scene& scene, int material,
                       const RobustnessOptions& options);

}  // namespace matlift::metrics
