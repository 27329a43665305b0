#include "fixtures.hpp"

namespace matlift::testing {

lift::Scene demo_scene(int n_views, int size) {
  auto mesh = demo::three_material_object();
  auto manifest = scene::fibonacci_manifest(mesh, n_views, {size, size});
  return lift::Scene::create(std::move(mesh), std::move(manifest));
}

lift::Scene sphere_scene(int n_views, int size) {
  auto mesh = demo::single_material_sphere();
  auto manifest = scene::fibonacci_manifest(mesh, n_views, {size, size});
  return lift::Scene::create(std::move(mesh), std::move(manifest));
}

std::shared_ptr<const oracle::SimilarityOracle> synthetic_oracle(oracle::NoiseModel noise) {
  return std::make_shared<const oracle::SyntheticOracle>(noise);
}

metrics::SessionFactory session_factory(const lift::Scene& scene,
                                        std::shared_ptr<const oracle::SimilarityOracle> oracle,
                                        lift::SelectionConfig config) {
  return [scene, oracle, config] {
    return std::make_unique<lift::SelectionSession>(scene, oracle, config);
  };
}

oracle::Click interior_click(const render::ViewBundle& bundle, int material, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return oracle::sample_click(bundle.material_id, material, rng, bundle.view_id);
}

std::shared_ptr<lift::SimilarityCloud> uniform_cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  auto cloud = std::make_shared<lift::SimilarityCloud>();
  cloud->view_ids = {"v0"};
  cloud->points.resize(n);
  cloud->values.resize(n);
  cloud->view_index.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    cloud->points[i] = {u(rng), u(rng), u(rng)};
    cloud->values[i] = u(rng);
  }
  return cloud;
}

BinaryMask random_mask(int w, int h, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution b(p);
  BinaryMask m(w, h);
  for (auto& v : m.pixels.data()) v = b(rng) ? 1 : 0;
  return m;
}

}  // namespace matlift::testing
