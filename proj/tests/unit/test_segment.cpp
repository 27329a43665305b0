#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "matlift/error.hpp"
#include "matlift/metrics.hpp"
#include "matlift/raster_io.hpp"
#include "matlift/segment.hpp"

using namespace matlift;
using namespace matlift::segment;

namespace {

// Inverse transform: LAB (D65) -> XYZ -> linear sRGB -> encoded sRGB in [0, 255].
std::array<double, 3> lab_to_rgb(const LabColor& lab) {
  const double fy = (lab.L + 16.0) / 116.0;
  const double fx = fy + lab.a / 500.0;
  const double fz = fy - lab.b / 200.0;
  const auto finv = [](double f) {
    constexpr double d = 6.0 / 29.0;
    return f > d ? f * f * f : 3.0 * d * d * (f - 4.0 / 29.0);
  };
  const double x = 0.95047 * finv(fx), y = finv(fy), z = 1.08883 * finv(fz);
  const double lin[3] = {3.2404542 * x - 1.5371385 * y - 0.4985314 * z,
                         -0.9692660 * x + 1.8760108 * y + 0.0415560 * z,
                         0.0556434 * x - 0.2040259 * y + 1.0572252 * z};
  std::array<double, 3> out{};
  for (int i = 0; i < 3; ++i) {
    const double c = lin[i] <= 0.0031308 ? 12.92 * lin[i] : 1.055 * std::pow(lin[i], 1.0 / 2.4) - 0.055;
    out[i] = 255.0 * c;
  }
  return out;
}

std::vector<BinaryMask> masks_from(std::initializer_list<std::initializer_list<int>> views, int w = 4) {
  std::vector<BinaryMask> out;
  for (const auto& bits : views) {
    BinaryMask m(w, 1);
    int x = 0;
    for (int b : bits) m.set(x++, 0, b != 0);
    out.push_back(m);
  }
  return out;
}

// Flat-coloured bundle whose foreground is split into two colours by area fraction.
render::ViewBundle two_colour_view(double fraction_first) {
  render::ViewBundle b;
  b.view_id = "flat";
  const int w = 100, h = 50;
  b.camera = scene::make_camera({0, 0, 4}, {0, 0, 0}, 0.7, {w, h});
  b.rgb = Raster<std::uint8_t>(w, h, 3);
  b.depth = Raster<float>(w, h, 1, 1.0f);
  b.material_id = Raster<std::int32_t>(w, h, 1, 0);
  const int split = static_cast<int>(std::lround(fraction_first * w));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool first = x < split;
      b.rgb.at(x, y, 0) = first ? 220 : 20;
      b.rgb.at(x, y, 1) = first ? 30 : 40;
      b.rgb.at(x, y, 2) = first ? 30 : 210;
      b.material_id.at(x, y) = first ? 0 : 1;
    }
  }
  return b;
}

}  // namespace

TEST_CASE("LAB conversion") {
  const auto white = rgb_to_lab(255, 255, 255);
  CHECK(white.L == doctest::Approx(100.0).epsilon(1e-6));
  CHECK(std::abs(white.a) < 0.01);
  CHECK(std::abs(white.b) < 0.01);
  CHECK(rgb_to_lab(0, 0, 0).L == doctest::Approx(0.0));

  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> byte(0, 255);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::uint8_t rgb[3] = {static_cast<std::uint8_t>(byte(rng)), static_cast<std::uint8_t>(byte(rng)),
                                 static_cast<std::uint8_t>(byte(rng))};
    const auto back = lab_to_rgb(rgb_to_lab(rgb[0], rgb[1], rgb[2]));
    for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(back[c] - rgb[c]) / 255.0);
  }
  CHECK(worst <= 1.0 / 255.0);
}

TEST_CASE("histogram bins") {
  CHECK(kHistogramBins == 1024);
  std::set<int> seen;
  for (int r = 0; r < 256; r += 15) {
    for (int g = 0; g < 256; g += 15) {
      for (int b = 0; b < 256; b += 15) {
        const int bin = histogram_bin(rgb_to_lab(r, g, b));
        CHECK(bin >= 0);
        CHECK(bin < kHistogramBins);
        seen.insert(bin);
      }
    }
  }
  CHECK(seen.size() > 20);
  // L = 100 clamps into the top L bin; neutral a/b sit at index 8.
  CHECK(histogram_bin({100.0, 0.0, 0.0}) == (3 * 16 + 8) * 16 + 8);
  CHECK(histogram_bin({0.0, -200.0, 500.0}) == (0 * 16 + 0) * 16 + 15);
}

TEST_CASE("click allocation") {
  SUBCASE("80/20 split of 25") {
    const std::vector<std::size_t> areas{800, 200};
    CHECK(allocate_clicks(areas, 25) == std::vector<int>{20, 5});
  }
  SUBCASE("single mode takes everything") {
    const std::vector<std::size_t> areas{1234};
    CHECK(allocate_clicks(areas, 25) == std::vector<int>{25});
  }
  SUBCASE("largest remainder with area tie-break") {
    const std::vector<std::size_t> areas{1, 1, 1};
    CHECK(allocate_clicks(areas, 2) == std::vector<int>{1, 1, 0});
    const std::vector<std::size_t> uneven{10, 30, 10};
    CHECK(allocate_clicks(uneven, 2) == std::vector<int>{1, 1, 0});
  }
  SUBCASE("small modes get one click while the largest keeps one") {
    const std::vector<std::size_t> areas{10000, 5, 3};
    CHECK(allocate_clicks(areas, 25) == std::vector<int>{23, 1, 1});
    const std::vector<std::size_t> crowded{10, 9, 8, 7};
    const auto alloc = allocate_clicks(crowded, 2);
    CHECK(std::accumulate(alloc.begin(), alloc.end(), 0) == 2);
  }
  SUBCASE("sums to total on random inputs") {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<std::size_t> area(1, 100000);
    std::uniform_int_distribution<int> count(1, 40), total(1, 60);
    for (int trial = 0; trial < 500; ++trial) {
      std::vector<std::size_t> areas(count(rng));
      for (auto& a : areas) a = area(rng);
      const int t = total(rng);
      const auto alloc = allocate_clicks(areas, t);
      CHECK(std::accumulate(alloc.begin(), alloc.end(), 0) == t);
      for (int a : alloc) CHECK(a >= 0);
      if (static_cast<int>(areas.size()) <= t) {
        for (int a : alloc) CHECK(a >= 1);
      }
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(allocate_clicks(std::vector<std::size_t>{}, 5), Error);
    CHECK_THROWS_AS(allocate_clicks(std::vector<std::size_t>{3}, 0), Error);
  }
}

TEST_CASE("click proposal") {
  SUBCASE("two colours at 80/20") {
    const std::vector<render::ViewBundle> views{two_colour_view(0.8)};
    const auto modes = color_modes(views);
    REQUIRE(modes.size() == 2);
    const auto clicks = propose_clicks(views, 25, 3);
    REQUIRE(clicks.size() == 25);
    int first = 0;
    for (const auto& c : clicks) first += views[0].material_id.at(c.x, c.y) == 0;
    CHECK(first == 20);
  }
  SUBCASE("uniform colour puts every click in one mode") {
    const std::vector<render::ViewBundle> views{two_colour_view(1.0)};
    CHECK(color_modes(views).size() == 1);
    CHECK(propose_clicks(views, 25, 4).size() == 25);
  }
  SUBCASE("rendered object: clicks land on foreground pixels of a mode") {
    const auto scene = testing::demo_scene(4, 96);
    const auto views = render::render_views(*scene.mesh, *scene.bvh, scene.manifest);
    const auto modes = color_modes(views);
    std::set<int> bins;
    for (const auto& m : modes) bins.insert(m.bin);
    std::size_t fg = 0, counted = 0;
    for (const auto& b : views) {
      for (auto id : b.material_id.data()) fg += id >= 0;
    }
    for (const auto& m : modes) counted += m.area();
    CHECK(counted == fg);
    const auto clicks = propose_clicks(views, 25, 5);
    CHECK(clicks.size() == 25);
    for (const auto& c : clicks) {
      const auto it = std::find_if(views.begin(), views.end(), [&](const auto& b) { return b.view_id == c.view_id; });
      REQUIRE(it != views.end());
      CHECK(it->foreground(c.x, c.y));
      CHECK(bins.count(histogram_bin(rgb_to_lab(it->rgb.at(c.x, c.y, 0), it->rgb.at(c.x, c.y, 1),
                                                it->rgb.at(c.x, c.y, 2)))) == 1);
    }
    CHECK(propose_clicks(views, 25, 5) == clicks);
  }
  SUBCASE("no foreground") {
    auto b = two_colour_view(0.5);
    for (auto& id : b.material_id.data()) id = -1;
    CHECK_THROWS_AS(propose_clicks(std::vector<render::ViewBundle>{b}, 5, 0), Error);
  }
}

TEST_CASE("merging selections") {
  SUBCASE("identical masks merge") {
    const std::vector<std::vector<BinaryMask>> sets{masks_from({{1, 1, 0, 0}}), masks_from({{1, 1, 0, 0}})};
    const auto groups = merge_selections(sets);
    REQUIRE(groups.size() == 1);
    CHECK(groups[0].members == std::vector<std::size_t>{0, 1});
  }
  SUBCASE("disjoint masks stay apart") {
    const std::vector<std::vector<BinaryMask>> sets{masks_from({{1, 1, 0, 0}}), masks_from({{0, 0, 1, 1}})};
    CHECK(merge_selections(sets).size() == 2);
  }
  SUBCASE("the larger selection survives") {
    const std::vector<std::vector<BinaryMask>> sets{masks_from({{1, 1, 1, 0}}, 4),
                                                    masks_from({{1, 1, 1, 1}}, 4)};
    const auto groups = merge_selections(sets, 0.7);
    REQUIRE(groups.size() == 1);
    CHECK(groups[0].representative == 1);
    CHECK(groups[0].area == 4);
  }
  SUBCASE("matrix properties") {
    std::mt19937_64 rng(6);
    std::vector<std::vector<BinaryMask>> sets;
    for (int i = 0; i < 6; ++i) sets.push_back({testing::random_mask(10, 10, 0.5, rng), testing::random_mask(10, 10, 0.5, rng)});
    const auto m = merge_matrix(sets);
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(m.at(i, i) == 1.0);
      for (std::size_t j = 0; j < 6; ++j) {
        CHECK(m.at(i, j) == m.at(j, i));
        CHECK(m.at(i, j) >= 0.0);
        CHECK(m.at(i, j) <= 1.0);
      }
    }
  }
  SUBCASE("terminates below tau and is permutation insensitive") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 30; ++trial) {
      // Noisy copies of three prototypes give distinct pairwise values.
      std::vector<BinaryMask> protos;
      for (int p = 0; p < 3; ++p) protos.push_back(testing::random_mask(30, 30, 0.3, rng));
      std::vector<std::vector<BinaryMask>> sets;
      for (int i = 0; i < 9; ++i) {
        BinaryMask m = protos[i % 3];
        std::bernoulli_distribution flip(0.05);
        for (auto& v : m.pixels.data()) {
          if (flip(rng)) v ^= 1;
        }
        sets.push_back({m});
      }
      const auto groups = merge_selections(sets, 0.75);
      CHECK(groups.size() >= 1);
      CHECK(groups.size() <= sets.size());
      std::vector<std::vector<BinaryMask>> reps;
      for (const auto& g : groups) reps.push_back(sets[g.representative]);
      const auto m = merge_matrix(reps);
      for (std::size_t i = 0; i < reps.size(); ++i) {
        for (std::size_t j = i + 1; j < reps.size(); ++j) CHECK(m.at(i, j) < 0.75);
      }
      std::size_t members = 0;
      for (const auto& g : groups) members += g.members.size();
      CHECK(members == sets.size());

      std::vector<std::size_t> perm(sets.size());
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      std::vector<std::vector<BinaryMask>> shuffled;
      for (auto p : perm) shuffled.push_back(sets[p]);
      const auto again = merge_selections(shuffled, 0.75);
      std::set<std::set<std::size_t>> a, b;
      for (const auto& g : groups) a.insert(std::set<std::size_t>(g.members.begin(), g.members.end()));
      for (const auto& g : again) {
        std::set<std::size_t> s;
        for (auto i : g.members) s.insert(perm[i]);
        b.insert(s);
      }
      CHECK(a == b);
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(merge_selections(std::vector<std::vector<BinaryMask>>{}), Error);
    const std::vector<std::vector<BinaryMask>> uneven{masks_from({{1, 0}}, 2), masks_from({{1, 0, 1}}, 3)};
    CHECK_THROWS_AS(merge_selections(uneven), Error);
  }
}

TEST_CASE("six clicks on three materials merge into three groups") {
  const auto scene = testing::demo_scene(12, 160);
  lift::SelectionSession session(scene, testing::synthetic_oracle());
  session.ensure_rendered();
  std::vector<std::shared_ptr<const lift::SimilarityCloud>> clouds;
  std::vector<int> material_of;
  for (int m = 0; m < 3; ++m) {
    int taken = 0;
    for (const auto& b : session.bundles()) {
      if (taken == 2) break;
      try {
        const auto click = testing::interior_click(b, m, static_cast<std::uint64_t>(taken));
        session.select(click);
        clouds.push_back(session.result()->cloud);
        material_of.push_back(m);
        ++taken;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kUnselectable) throw;
      }
    }
    REQUIRE(taken == 2);
  }
  const auto index = session.result()->index;
  const auto cams = metrics::random_novel_views(scene, 6, 1, {96, 96});
  std::vector<std::vector<BinaryMask>> masks(clouds.size());
  for (const auto& cam : cams) {
    const auto field = lift::gather_neighbor_ids(index, *scene.bvh, cam, {});
    for (std::size_t c = 0; c < clouds.size(); ++c) masks[c].push_back(lift::vote_field(field, clouds[c]->values, 0.5).mask);
  }
  const auto groups = merge_selections(masks);
  REQUIRE(groups.size() == 3);
  for (const auto& g : groups) {
    REQUIRE(g.members.size() == 2);
    CHECK(material_of[g.members[0]] == material_of[g.members[1]]);
  }
}

TEST_CASE("automatic segmentation") {
  SUBCASE("three-material object") {
    const auto scene = testing::demo_scene(12, 160);
    lift::SelectionSession session(scene, testing::synthetic_oracle());
    SegmentParams p;
    p.total_clicks = 12;
    const auto result = segment_object(session, p);
    CHECK(result.clicks.size() == 12);
    REQUIRE(result.groups.size() == 3);
    REQUIRE(result.index.has_value());
    CHECK(result.point_labels.size() == result.index->cloud().size());

    // Match each group to the material its representative clicked, then score label renders.
    const auto cams = metrics::random_novel_views(scene, 4, 11, {96, 96});
    std::vector<int> group_material;
    for (const auto& g : result.groups) {
      const auto* view = scene.manifest.find(g.representative.view_id);
      REQUIRE(view != nullptr);
      const auto b = render::render_view(*scene.mesh, *scene.bvh, view->camera);
      group_material.push_back(b.material_id.at(g.representative.x, g.representative.y));
    }
    CHECK(std::set<int>(group_material.begin(), group_material.end()).size() == 3);
    for (int g = 0; g < 3; ++g) {
      std::vector<BinaryMask> pred, truth;
      for (const auto& cam : cams) {
        const auto labels = result.label_view(*scene.bvh, cam);
        BinaryMask m(96, 96);
        for (std::size_t i = 0; i < labels.data().size(); ++i) m.pixels[i] = labels[i] == g;
        pred.push_back(m);
        truth.push_back(metrics::ground_truth_mask(scene, cam, group_material[g]));
      }
      CHECK(metrics::pooled_iou(pred, truth) >= 0.9);
    }

    const auto j = result.to_json();
    CHECK(j["groups"].size() == 3);
    CHECK(j["groups"].size() <= 25);
    CHECK(j["groups"][0].contains("representative_click"));
    CHECK(j["groups"][0]["color"].size() == 3);
    CHECK(j["assignment"]["count"] == result.point_labels.size());
  }
  SUBCASE("single-material object gives one group over all foreground") {
    const auto scene = testing::sphere_scene(8, 96);
    lift::SelectionSession session(scene, testing::synthetic_oracle());
    SegmentParams p;
    p.total_clicks = 5;
    const auto result = segment_object(session, p);
    REQUIRE(result.groups.size() == 1);
    for (auto l : result.point_labels) CHECK(l == 0);
    const auto cam = metrics::random_novel_views(scene, 1, 2, {64, 64})[0];
    const auto labels = result.label_view(*scene.bvh, cam);
    const auto fg = metrics::ground_truth_mask(scene, cam, 0);
    for (std::size_t i = 0; i < labels.data().size(); ++i) CHECK((labels[i] == 0) == (fg.pixels[i] != 0));
  }
  SUBCASE("parameter validation") {
    const auto scene = testing::sphere_scene(2, 32);
    lift::SelectionSession session(scene, testing::synthetic_oracle());
    SegmentParams p;
    p.total_clicks = 0;
    CHECK_THROWS_AS(segment_object(session, p), Error);
    p = {};
    p.tau = 1.5;
    CHECK_THROWS_AS(segment_object(session, p), Error);
  }
}

TEST_CASE("label file round trip") {
  const std::vector<std::int32_t> labels{0, 1, kUnknownLabel, 2, 2, 0};
  const auto path = std::filesystem::temp_directory_path() / "matlift_labels.bin";
  save_labels(labels, path);
  CHECK(std::filesystem::file_size(path) == 12 + 4 * labels.size());
  CHECK(load_labels(path) == labels);
  io::write_file(path, "MSL1", 4);
  CHECK_THROWS_AS(load_labels(path), Error);
  std::filesystem::remove(path);
}
