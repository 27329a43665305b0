#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "matlift/error.hpp"
#include "matlift/ivf_index.hpp"

using namespace matlift;
using namespace matlift::lift;

namespace {

std::shared_ptr<SimilarityCloud> blobs(std::size_t per_blob, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 0.05f);
  auto cloud = std::make_shared<SimilarityCloud>();
  cloud->view_ids = {"v"};
  for (std::size_t i = 0; i < 2 * per_blob; ++i) {
    const float cx = i < per_blob ? -5.0f : 5.0f;
    cloud->points.push_back({cx + g(rng), g(rng), g(rng)});
    cloud->values.push_back(i < per_blob ? 0.0f : 1.0f);
    cloud->view_index.push_back(0);
  }
  return cloud;
}

// Exact kNN by full sort with the (distance, id) order.
std::vector<std::uint32_t> sorted_ids(const SimilarityCloud& cloud, const Point3f& q, int k) {
  std::vector<std::pair<float, std::uint32_t>> all;
  for (std::uint32_t i = 0; i < cloud.size(); ++i) all.push_back({squared_distance(cloud.points[i], q), i});
  std::sort(all.begin(), all.end());
  std::vector<std::uint32_t> ids;
  for (int i = 0; i < k && i < static_cast<int>(all.size()); ++i) ids.push_back(all[i].second);
  return ids;
}

std::vector<std::uint32_t> ids_of(const std::vector<Neighbor>& n) {
  std::vector<std::uint32_t> ids;
  for (const auto& x : n) ids.push_back(x.id);
  return ids;
}

}  // namespace

TEST_CASE("brute force matches a full sort") {
  const auto cloud = testing::uniform_cloud(2000, 1);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (int q = 0; q < 50; ++q) {
    const Point3f p{u(rng), u(rng), u(rng)};
    CHECK(ids_of(brute_force_knn(*cloud, p, 9)) == sorted_ids(*cloud, p, 9));
  }
}

TEST_CASE("partition invariants") {
  const auto cloud = testing::uniform_cloud(5000, 3);
  const auto index = IvfIndex::build(cloud, {.n_clusters = 50, .seed = 1});
  CHECK(index.cluster_count() <= 50);
  CHECK(index.cluster_count() == index.centroids().size());
  std::vector<int> seen(cloud->size(), 0);
  for (std::size_t c = 0; c < index.cluster_count(); ++c) {
    CHECK_FALSE(index.list(c).empty());
    for (auto id : index.list(c)) ++seen[id];
  }
  for (int s : seen) CHECK(s == 1);
  CHECK(index.iterations() >= 1);
  CHECK(index.iterations() <= 25);
  CHECK(index.build_ms() >= 0.0);
}

TEST_CASE("exhaustive probing equals brute force") {
  for (std::size_t n : {50u, 777u, 10000u}) {
    const auto cloud = testing::uniform_cloud(n, n);
    const auto index = IvfIndex::build(cloud, {.n_clusters = 40, .seed = 5});
    const int all = static_cast<int>(index.cluster_count());
    std::mt19937_64 rng(n + 1);
    std::uniform_real_distribution<float> u(-0.2f, 1.2f);
    for (int q = 0; q < 200; ++q) {
      const Point3f p{u(rng), u(rng), u(rng)};
      for (int k : {1, 9, 25}) CHECK(index.search(p, k, all) == brute_force_knn(*cloud, p, k));
    }
  }
}

TEST_CASE("ties are broken by id") {
  auto cloud = std::make_shared<SimilarityCloud>();
  cloud->view_ids = {"v"};
  for (int i = 0; i < 12; ++i) {
    cloud->points.push_back({1.0f, 0.0f, 0.0f});
    cloud->values.push_back(0.0f);
    cloud->view_index.push_back(0);
  }
  const auto index = IvfIndex::build(cloud, {.n_clusters = 3});
  const auto got = index.search({0, 0, 0}, 5, 3);
  CHECK(ids_of(got) == std::vector<std::uint32_t>{0, 1, 2, 3, 4});
}

TEST_CASE("degenerate cluster counts") {
  SUBCASE("one cluster per point") {
    const auto cloud = testing::uniform_cloud(100, 7);
    const auto index = IvfIndex::build(cloud, {.n_clusters = 100});
    CHECK(index.cluster_count() <= 100);
    for (std::uint32_t i = 0; i < 100; ++i) {
      const auto hit = index.search(cloud->points[i], 1, 1);
      REQUIRE(hit.size() == 1);
      CHECK(hit[0].distance == 0.0f);
    }
  }
  SUBCASE("single cluster") {
    const auto cloud = testing::uniform_cloud(300, 8);
    const auto index = IvfIndex::build(cloud, {.n_clusters = 1});
    REQUIRE(index.cluster_count() == 1);
    CHECK(index.list(0).size() == 300);
  }
  SUBCASE("more clusters than points clamps") {
    const auto cloud = testing::uniform_cloud(10, 9);
    const auto index = IvfIndex::build(cloud, {.n_clusters = 100});
    CHECK(index.cluster_count() <= 10);
    CHECK(index.search({0.5f, 0.5f, 0.5f}, 50, 100).size() == 10);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(IvfIndex::build(std::make_shared<SimilarityCloud>()), Error);
    CHECK_THROWS_AS(IvfIndex::build(testing::uniform_cloud(10, 1), {.n_clusters = 0}), Error);
  }
}

TEST_CASE("two separated blobs form two clusters") {
  const auto cloud = blobs(500, 11);
  const auto index = IvfIndex::build(cloud, {.n_clusters = 2, .seed = 3});
  REQUIRE(index.cluster_count() == 2);
  for (std::size_t c = 0; c < 2; ++c) {
    const auto list = index.list(c);
    REQUIRE(list.size() == 500);
    std::set<bool> side;
    for (auto id : list) side.insert(id < 500);
    CHECK(side.size() == 1);
  }
  // Exhaustive check that every point sits in the list of its nearest centroid.
  for (std::size_t c = 0; c < 2; ++c) {
    for (auto id : index.list(c)) {
      const float own = squared_distance(cloud->points[id], index.centroids()[c]);
      const float other = squared_distance(cloud->points[id], index.centroids()[1 - c]);
      CHECK(own <= other);
    }
  }
}

TEST_CASE("existing points are their own nearest neighbour") {
  const auto cloud = testing::uniform_cloud(3000, 12);
  const auto index = IvfIndex::build(cloud);
  for (std::uint32_t i = 0; i < 3000; i += 37) {
    for (int probe : {1, 5}) {
      const auto hit = index.search(cloud->points[i], 1, probe);
      REQUIRE(hit.size() == 1);
      CHECK(hit[0].distance == 0.0f);
    }
  }
}

TEST_CASE("recall at default probing") {
  const auto cloud = testing::uniform_cloud(20000, 13);
  const auto index = IvfIndex::build(cloud, {.n_clusters = 100, .seed = 0});
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  double found = 0.0;
  const int queries = 300;
  for (int q = 0; q < queries; ++q) {
    const Point3f p{u(rng), u(rng), u(rng)};
    const auto exact = ids_of(brute_force_knn(*cloud, p, 9));
    const auto hits = index.search(p, 9, 5);
    const auto approx = ids_of(hits);
    const std::set<std::uint32_t> truth(exact.begin(), exact.end());
    for (auto id : approx) found += truth.count(id);
    for (std::size_t i = 1; i < hits.size(); ++i) CHECK(hits[i - 1].distance <= hits[i].distance);
  }
  CHECK(found / (9.0 * queries) >= 0.95);
}

TEST_CASE("build is deterministic and with_values keeps the clustering") {
  const auto cloud = testing::uniform_cloud(4000, 15);
  const auto a = IvfIndex::build(cloud, {.seed = 4});
  const auto b = IvfIndex::build(cloud, {.seed = 4});
  REQUIRE(a.cluster_count() == b.cluster_count());
  for (std::size_t c = 0; c < a.cluster_count(); ++c) {
    CHECK(a.centroids()[c] == b.centroids()[c]);
    CHECK(std::equal(a.list(c).begin(), a.list(c).end(), b.list(c).begin(), b.list(c).end()));
  }

  auto relabeled = std::make_shared<SimilarityCloud>(*cloud);
  for (auto& v : relabeled->values) v = 1.0f - v;
  const auto c = a.with_values(relabeled);
  CHECK(c.cluster_count() == a.cluster_count());
  CHECK(c.cloud().values == relabeled->values);
  const Point3f q{0.3f, 0.6f, 0.1f};
  CHECK(c.search(q, 9, 5) == a.search(q, 9, 5));

  CHECK_THROWS_AS(a.with_values(testing::uniform_cloud(10, 1)), Error);
}
