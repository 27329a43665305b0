#include <random>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "matlift/postprocess.hpp"

using namespace matlift;
using namespace matlift::postprocess;

namespace {

BinaryMask naive_erode(const BinaryMask& m, int r) {
  BinaryMask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      bool all = true;
      for (int dy = -r; dy <= r && all; ++dy) {
        for (int dx = -r; dx <= r && all; ++dx) {
          all = m.pixels.in_bounds(x + dx, y + dy) && m.get(x + dx, y + dy);
        }
      }
      out.set(x, y, all);
    }
  }
  return out;
}

BinaryMask naive_dilate(const BinaryMask& m, int r) {
  BinaryMask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      bool any = false;
      for (int dy = -r; dy <= r && !any; ++dy) {
        for (int dx = -r; dx <= r && !any; ++dx) {
          any = m.pixels.in_bounds(x + dx, y + dy) && m.get(x + dx, y + dy);
        }
      }
      out.set(x, y, any);
    }
  }
  return out;
}

// Flood fill of one 4-connected component; returns its area.
std::size_t flood(const BinaryMask& m, std::vector<int>& seen, int sx, int sy, int label) {
  std::vector<std::pair<int, int>> stack{{sx, sy}};
  seen[sy * m.width() + sx] = label;
  std::size_t area = 0;
  while (!stack.empty()) {
    auto [x, y] = stack.back();
    stack.pop_back();
    ++area;
    const int nx[4] = {x + 1, x - 1, x, x};
    const int ny[4] = {y, y, y + 1, y - 1};
    for (int k = 0; k < 4; ++k) {
      if (!m.pixels.in_bounds(nx[k], ny[k]) || !m.get(nx[k], ny[k])) continue;
      int& s = seen[ny[k] * m.width() + nx[k]];
      if (s < 0) {
        s = label;
        stack.push_back({nx[k], ny[k]});
      }
    }
  }
  return area;
}

BinaryMask square(int w, int h, int x0, int y0, int side) {
  BinaryMask m(w, h);
  for (int y = y0; y < y0 + side; ++y) {
    for (int x = x0; x < x0 + side; ++x) m.set(x, y, true);
  }
  return m;
}

bool subset(const BinaryMask& a, const BinaryMask& b) {
  for (std::size_t i = 0; i < a.pixels.data().size(); ++i) {
    if (a.pixels[i] && !b.pixels[i]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("erosion examples") {
  const auto m = square(120, 120, 10, 10, 100);
  CHECK(erode(m, 0) == m);
  const auto e = erode(m, 4);
  CHECK(e == square(120, 120, 14, 14, 92));
  CHECK(erode(square(20, 20, 5, 5, 5), 4).count() == 0);
  // Set pixels at the raster edge erode because outside counts as unset.
  BinaryMask full(10, 10);
  for (auto& v : full.pixels.data()) v = 1;
  CHECK(erode(full, 1).count() == 64);
}

TEST_CASE("erode and dilate match the window definition") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = testing::random_mask(31, 23, 0.6, rng);
    for (int r : {0, 1, 2, 4}) {
      CHECK(erode(m, r) == naive_erode(m, r));
      CHECK(dilate(m, r) == naive_dilate(m, r));
    }
  }
}

TEST_CASE("opening is idempotent at matched radii") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = testing::random_mask(40, 40, 0.7, rng);
    for (int r : {1, 2, 3}) {
      const auto e = erode(m, r);
      CHECK(erode(dilate(e, r), r) == e);
    }
  }
}

TEST_CASE("connected components") {
  SUBCASE("diagonal neighbours are separate") {
    BinaryMask m(4, 4);
    m.set(1, 1, true);
    m.set(2, 2, true);
    const auto c = connected_components(m);
    CHECK(c.count == 2);
    CHECK(c.labels.at(1, 1) == 0);
    CHECK(c.labels.at(2, 2) == 1);
    CHECK(c.labels.at(0, 0) == -1);
  }
  SUBCASE("empty mask") { CHECK(connected_components(BinaryMask(8, 8)).count == 0); }
  SUBCASE("random masks match flood fill") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 20; ++trial) {
      const auto m = testing::random_mask(64, 64, 0.45, rng);
      const auto c = connected_components(m);
      std::vector<int> seen(64 * 64, -1);
      std::vector<std::size_t> areas;
      for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 64; ++x) {
          if (m.get(x, y) && seen[y * 64 + x] < 0) {
            areas.push_back(flood(m, seen, x, y, static_cast<int>(areas.size())));
          }
        }
      }
      REQUIRE(c.count == static_cast<int>(areas.size()));
      CHECK(c.areas == areas);
      std::size_t sum = 0;
      for (auto a : c.areas) sum += a;
      CHECK(sum == m.count());
      for (int i = 0; i < 64 * 64; ++i) CHECK(c.labels[i] == seen[i]);
    }
  }
}

TEST_CASE("fill_holes and remove_sprinkles") {
  SUBCASE("donut") {
    auto m = square(20, 20, 5, 5, 7);
    m.set(8, 8, false);
    m.set(9, 8, false);
    m.set(8, 9, false);
    CHECK(fill_holes(m, 10) == square(20, 20, 5, 5, 7));
    CHECK(fill_holes(m, 2) == m);
  }
  SUBCASE("border-touching background is never filled") {
    BinaryMask m(10, 10);
    for (int y = 0; y < 10; ++y) m.set(5, y, true);
    CHECK(fill_holes(m, 1000) == m);
  }
  SUBCASE("speck removal") {
    auto m = square(20, 20, 2, 2, 5);
    m.set(15, 15, true);
    const auto out = remove_sprinkles(m, 5);
    CHECK_FALSE(out.get(15, 15));
    CHECK(out == square(20, 20, 2, 2, 5));
  }
  SUBCASE("zero thresholds are the identity") {
    std::mt19937_64 rng(14);
    const auto m = testing::random_mask(32, 32, 0.5, rng);
    CHECK(fill_holes(m, 0) == m);
    CHECK(remove_sprinkles(m, 0) == m);
  }
  SUBCASE("monotone and idempotent") {
    std::mt19937_64 rng(15);
    for (int trial = 0; trial < 20; ++trial) {
      const auto m = testing::random_mask(48, 48, 0.55, rng);
      const auto f = fill_holes(m, 6);
      const auto s = remove_sprinkles(m, 6);
      CHECK(subset(m, f));
      CHECK(subset(s, m));
      CHECK(fill_holes(f, 6) == f);
      CHECK(remove_sprinkles(s, 6) == s);
    }
  }
}
