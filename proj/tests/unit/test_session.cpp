#include <atomic>
#include <functional>
#include <set>
#include <thread>

#include "doctest.h"
#include "fixtures.hpp"
#include "matlift/cloud.hpp"
#include "matlift/error.hpp"
#include "matlift/metrics.hpp"
#include "matlift/session.hpp"

using namespace matlift;
using namespace matlift::lift;

namespace {

struct Fixture {
  lift::Scene scene = testing::demo_scene(10, 128);
  std::shared_ptr<const oracle::SimilarityOracle> oracle = testing::synthetic_oracle();
  SelectionSession session{scene, oracle};

  oracle::Click click_on(int material, std::uint64_t seed = 0) {
    session.ensure_rendered();
    for (const auto& b : session.bundles()) {
      try {
        return testing::interior_click(b, material, seed);
      } catch (const Error&) {
      }
    }
    FAIL("material not visible");
    return {};
  }
};

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST_CASE("invalid clicks fail before any rendering") {
  Fixture f;
  const auto& view = f.scene.manifest.views[0];
  CHECK(code_of([&] { f.session.select({view.id, 0, 0}); }) == ErrorCode::kBackgroundClick);
  CHECK(code_of([&] { f.session.select({view.id, -1, 5}); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([&] { f.session.select({view.id, 5, 500}); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([&] { f.session.select({"missing", 5, 5}); }) == ErrorCode::kNotFound);
  CHECK(f.session.bundles().empty());
  CHECK(f.oracle->call_count() == 0);
  CHECK_FALSE(f.session.has_selection());
  CHECK(code_of([&] { f.session.reconstruct(view.camera); }) == ErrorCode::kConflict);
  CHECK(code_of([&] { f.session.vote_at({0, 0, 0}); }) == ErrorCode::kConflict);
}

TEST_CASE("threshold changes reuse the index and never call the oracle") {
  Fixture f;
  const auto click = f.click_on(1);
  CHECK(f.session.select(click));
  REQUIRE(f.session.has_selection());
  CHECK(f.oracle->call_count() == 1);
  CHECK(f.session.index_builds() == 1);
  const auto first = f.session.result();

  CHECK_FALSE(f.session.select(click));
  CHECK(f.oracle->call_count() == 1);
  CHECK(f.session.result() == first);

  const auto cam = metrics::random_novel_views(f.scene, 1, 4, {96, 96})[0];
  const auto at_half = f.session.reconstruct(cam);
  for (double t : {0.2, 0.8, 1.0, 0.5}) {
    auto p = f.session.params();
    p.threshold = t;
    f.session.set_params(p);
    const auto rec = f.session.reconstruct(cam);
    CHECK(rec.mask.count() <= (t > 0.5 ? at_half.mask.count() : rec.mask.count()));
  }
  CHECK(f.session.reconstruct(cam).mask == at_half.mask);
  CHECK(f.oracle->call_count() == 1);
  CHECK(f.session.index_builds() == 1);
  CHECK(f.session.result() == first);

  auto bad = f.session.params();
  bad.k = 4;
  CHECK_THROWS_AS(f.session.set_params(bad), Error);
}

TEST_CASE("a new click lifts a new cloud") {
  Fixture f;
  f.session.select(f.click_on(0));
  const auto first = f.session.result();
  f.session.select(f.click_on(2));
  const auto second = f.session.result();
  CHECK(second != first);
  CHECK(second->generation > first->generation);
  CHECK(second->cache_key != first->cache_key);
  CHECK(f.oracle->call_count() == 2);
  CHECK(second->cloud->values != first->cloud->values);
  // Manifest clicks share cloud positions, so only the first click clusters.
  CHECK(second->cloud->points == first->cloud->points);
  CHECK(f.session.index_builds() == 1);
  const auto cam = metrics::random_novel_views(f.scene, 1, 9, {96, 96})[0];
  CHECK(metrics::miou(f.session.reconstruct(cam).mask, metrics::ground_truth_mask(f.scene, cam, 2)) >= 0.95);
}

TEST_CASE("trajectory starts at the click view and covers the manifest") {
  Fixture f;
  const auto click = f.click_on(0);
  f.session.select(click);
  const auto& traj = f.session.result()->trajectory;
  REQUIRE(traj.size() == f.scene.manifest.size());
  CHECK(traj[0] == click.view_id);
  std::set<std::string> ids(traj.begin(), traj.end());
  CHECK(ids.size() == traj.size());
  CHECK(f.session.result()->click_in_manifest);
  const auto& t = f.session.result()->timings;
  CHECK(t.total_ms >= t.index_build_ms);
}

TEST_CASE("off-manifest click camera") {
  Fixture f;
  std::optional<scene::Camera> found;
  oracle::Click click;
  for (const auto& cam : metrics::random_novel_views(f.scene, 10, 21, {128, 128})) {
    try {
      click = testing::interior_click(render::render_view(*f.scene.mesh, *f.scene.bvh, cam, "orbit"), 1);
      found = cam;
      break;
    } catch (const Error&) {
    }
  }
  REQUIRE(found.has_value());
  const scene::Camera cam = *found;
  CHECK(code_of([&] { f.session.select({f.scene.manifest.views[0].id, click.x, click.y}, cam); }) ==
        ErrorCode::kInvalidArgument);
  CHECK(f.session.select(click, cam));
  const auto r = f.session.result();
  CHECK_FALSE(r->click_in_manifest);
  CHECK(r->cloud->view_ids.back() == "orbit");
  CHECK(r->trajectory[0] == "orbit");
  CHECK(f.session.vote_at(r->click_point).selected);
}

TEST_CASE("selection is deterministic") {
  Fixture a, b;
  a.session.select(a.click_on(1));
  b.session.select(b.click_on(1));
  CHECK(lift::encode_cloud(*a.session.result()->cloud) == lift::encode_cloud(*b.session.result()->cloud));
  const auto cam = metrics::random_novel_views(a.scene, 1, 3, {80, 80})[0];
  CHECK(a.session.reconstruct(cam).mask == b.session.reconstruct(cam).mask);
}

TEST_CASE("restore reinstalls a stored cloud") {
  Fixture f;
  const auto click = f.click_on(0);
  f.session.select(click);
  const auto original = f.session.result();
  SelectionSession restored(f.scene, f.oracle);
  restored.restore(click, original->click_camera, *original->cloud);
  CHECK(restored.has_selection());
  CHECK(f.oracle->call_count() == 1);
  const auto cam = metrics::random_novel_views(f.scene, 1, 6, {80, 80})[0];
  CHECK(restored.reconstruct(cam).mask == f.session.reconstruct(cam).mask);
}

TEST_CASE("concurrent reads during a new click") {
  Fixture f;
  f.session.select(f.click_on(0));
  const auto cams = metrics::random_novel_views(f.scene, 4, 2, {64, 64});
  std::atomic<bool> stop = false;
  std::atomic<int> reads = 0;
  std::jthread reader([&] {
    while (!stop) {
      for (const auto& c : cams) {
        const auto rec = f.session.reconstruct(c);
        CHECK(rec.mask.width() == 64);
        ++reads;
      }
    }
  });
  f.session.select(f.click_on(2));
  f.session.select(f.click_on(1));
  stop = true;
  reader.join();
  CHECK(reads > 0);
}

TEST_CASE("session construction errors") {
  const auto scene = testing::demo_scene(2, 32);
  CHECK_THROWS_AS(SelectionSession(scene, nullptr), Error);
  auto empty = scene;
  empty.manifest.views.clear();
  CHECK_THROWS_AS(SelectionSession(empty, testing::synthetic_oracle()), Error);
  SelectionConfig bad;
  bad.stride = 0;
  CHECK_THROWS_AS(SelectionSession(scene, testing::synthetic_oracle(), bad), Error);
}
