#include <benchmark/benchmark.h>

#include <memory>
#include <random>

#include "matlift/demo_assets.hpp"
#include "matlift/ivf_index.hpp"
#include "matlift/lift.hpp"
#include "matlift/oracle.hpp"
#include "matlift/render.hpp"
#include "matlift/session.hpp"

using namespace matlift;

namespace {

struct Fixture {
  lift::Scene scene;
  std::unique_ptr<lift::SelectionSession> session;
  scene::Camera novel;

  Fixture()
      : scene(lift::Scene::create(demo::three_material_object(),
                                  scene::fibonacci_manifest(demo::three_material_object(), 30, {256, 256}))) {
    session = std::make_unique<lift::SelectionSession>(
        scene, std::make_shared<const oracle::SyntheticOracle>(oracle::NoiseModel{}));
    session->ensure_rendered();
    const auto& first = session->bundles().front();
    std::mt19937_64 rng(0);
    session->select(oracle::sample_click(first.material_id, 1, rng, first.view_id));
    novel = scene.manifest.views[7].camera;
    novel.resolution = {128, 128};
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

void BM_RenderView(benchmark::State& state) {
  auto& f = fixture();
  auto cam = f.scene.manifest.views[0].camera;
  cam.resolution = {static_cast<int>(state.range(0)), static_cast<int>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(render::render_view(*f.scene.mesh, *f.scene.bvh, cam));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_RenderView)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_IndexBuild(benchmark::State& state) {
  const auto cloud = fixture().session->result()->cloud;
  for (auto _ : state) benchmark::DoNotOptimize(lift::IvfIndex::build(cloud));
  state.counters["points"] = static_cast<double>(cloud->size());
}
BENCHMARK(BM_IndexBuild)->Unit(benchmark::kMillisecond);

void BM_IvfSearch(benchmark::State& state) {
  const auto& index = fixture().session->result()->index;
  const auto& points = index.cloud().points;
  std::vector<lift::Neighbor> out;
  std::size_t i = 0;
  for (auto _ : state) {
    index.search(points[(i * 7919) % points.size()], 9, static_cast<int>(state.range(0)), out);
    benchmark::DoNotOptimize(out.data());
    ++i;
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_IvfSearch)->Arg(1)->Arg(5)->Arg(20);

void BM_BruteForceSearch(benchmark::State& state) {
  const auto& cloud = fixture().session->result()->index.cloud();
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lift::brute_force_knn(cloud, cloud.points[(i * 7919) % cloud.size()], 9));
    ++i;
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_BruteForceSearch)->Unit(benchmark::kMillisecond);

void BM_ReconstructView(benchmark::State& state) {
  auto& f = fixture();
  const auto& index = f.session->result()->index;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lift::reconstruct_view(index, *f.scene.mesh, *f.scene.bvh, f.novel, {}));
  }
}
BENCHMARK(BM_ReconstructView)->Unit(benchmark::kMillisecond);

void BM_Revote(benchmark::State& state) {
  auto& f = fixture();
  const auto field = lift::gather_neighbors(f.session->result()->index, *f.scene.bvh, f.novel, {});
  double t = 0.3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lift::threshold_field(field, t));
    t = t > 0.7 ? 0.3 : t + 0.05;
  }
}
BENCHMARK(BM_Revote)->Unit(benchmark::kMicrosecond);

void BM_SelectNewClick(benchmark::State& state) {
  auto& f = fixture();
  const auto& bundles = f.session->bundles();
  std::mt19937_64 rng(1);
  int n = 0;
  for (auto _ : state) {
    const auto& b = bundles[static_cast<std::size_t>(n++) % bundles.size()];
    const int material = n % 2;
    try {
      benchmark::DoNotOptimize(f.session->select(oracle::sample_click(b.material_id, material, rng, b.view_id)));
    } catch (const Error&) {
      state.SkipWithError("no clickable pixel");
      break;
    }
  }
}
BENCHMARK(BM_SelectNewClick)->Unit(benchmark::kMillisecond)->Iterations(5);

}  // namespace

BENCHMARK_MAIN();
