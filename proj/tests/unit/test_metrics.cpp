#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "matlift/error.hpp"
#include "matlift/metrics.hpp"

using namespace matlift;
using namespace matlift::metrics;

namespace {

BinaryMask row(std::initializer_list<int> bits) {
  BinaryMask m(static_cast<int>(bits.size()), 1);
  int x = 0;
  for (int b : bits) m.set(x++, 0, b != 0);
  return m;
}

struct Counts {
  double tp = 0, fp = 0, fn = 0, tn = 0;
};

Counts count(const BinaryMask& pred, const BinaryMask& truth) {
  Counts c;
  for (int y = 0; y < pred.height(); ++y) {
    for (int x = 0; x < pred.width(); ++x) {
      const bool p = pred.get(x, y), t = truth.get(x, y);
      c.tp += p && t;
      c.fp += p && !t;
      c.fn += !p && t;
      c.tn += !p && !t;
    }
  }
  return c;
}

}  // namespace

TEST_CASE("hand-counted examples") {
  CHECK(miou(row({1, 1, 0, 0}), row({1, 0, 1, 0})) == doctest::Approx(1.0 / 3.0));
  CHECK(miou(row({1, 0, 1}), row({1, 0, 1})) == 1.0);
  CHECK(miou(row({1, 1, 0}), row({0, 0, 1})) == 0.0);
  CHECK(miou(row({0, 0}), row({0, 0})) == 1.0);

  auto prf = precision_recall_f1(row({1, 1, 0, 0}), row({1, 0, 1, 0}));
  CHECK(prf.precision == doctest::Approx(0.5));
  CHECK(prf.recall == doctest::Approx(0.5));
  CHECK(prf.f1 == doctest::Approx(0.5));
  prf = precision_recall_f1(row({1, 1, 1, 1}), row({1, 1, 0, 0}));
  CHECK(prf.precision == doctest::Approx(0.5));
  CHECK(prf.recall == 1.0);
  CHECK(prf.f1 == doctest::Approx(2.0 / 3.0));
  prf = precision_recall_f1(row({0, 0}), row({0, 0}));
  CHECK(prf.precision == 1.0);
  CHECK(prf.recall == 1.0);
  CHECK(prf.f1 == 1.0);
  prf = precision_recall_f1(row({0, 0}), row({1, 0}));
  CHECK(prf.precision == 0.0);
  CHECK(prf.recall == 0.0);
  CHECK(prf.f1 == 0.0);

  BinaryMask a(10, 10), b(10, 10);
  b.set(3, 3, true);
  b.set(7, 1, true);
  CHECK(hamming_pct(a, b) == doctest::Approx(2.0));
  CHECK(hamming_pct(a, a) == 0.0);
  BinaryMask c(10, 10);
  for (auto& v : c.pixels.data()) v = 1;
  CHECK(hamming_pct(a, c) == doctest::Approx(100.0));
}

TEST_CASE("shape mismatches are rejected") {
  const BinaryMask a(4, 4), b(4, 5);
  CHECK_THROWS_AS(miou(a, b), Error);
  CHECK_THROWS_AS(precision_recall_f1(a, b), Error);
  CHECK_THROWS_AS(hamming_pct(a, b), Error);
  const std::vector<BinaryMask> one{a}, two{a, a};
  CHECK_THROWS_AS(pooled_iou(one, two), Error);
}

TEST_CASE("random masks agree with direct counts and identities") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int trial = 0; trial < 300; ++trial) {
    const auto a = testing::random_mask(23, 17, u(rng), rng);
    const auto b = testing::random_mask(23, 17, u(rng), rng);
    const Counts c = count(a, b);
    const double iou_direct = c.tp / (c.tp + c.fp + c.fn);
    const double p = c.tp / (c.tp + c.fp), r = c.tp / (c.tp + c.fn);
    const double m = miou(a, b);
    CHECK(m == doctest::Approx(iou_direct));
    CHECK(m == doctest::Approx(miou(b, a)));
    CHECK(miou(a, a) == 1.0);
    const auto prf = precision_recall_f1(a, b);
    CHECK(prf.precision == doctest::Approx(p));
    CHECK(prf.recall == doctest::Approx(r));
    CHECK(prf.f1 == doctest::Approx(2 * p * r / (p + r)));
    CHECK(prf.f1 == doctest::Approx(2 * m / (1 + m)));
    CHECK(m <= std::min(prf.precision, prf.recall) + 1e-12);
    CHECK(hamming_pct(a, b) == doctest::Approx(100.0 * (c.fp + c.fn) / (23 * 17)));
    for (double v : {m, prf.precision, prf.recall, prf.f1}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("pooled IoU concatenates views") {
  std::mt19937_64 rng(18);
  std::vector<BinaryMask> a, b;
  Counts total;
  for (int v = 0; v < 5; ++v) {
    a.push_back(testing::random_mask(12, 9, 0.4, rng));
    b.push_back(testing::random_mask(12, 9, 0.6, rng));
    const Counts c = count(a.back(), b.back());
    total.tp += c.tp;
    total.fp += c.fp;
    total.fn += c.fn;
  }
  CHECK(pooled_iou(a, b) == doctest::Approx(total.tp / (total.tp + total.fp + total.fn)));
  CHECK(pooled_iou(a, a) == 1.0);
}

TEST_CASE("summary statistics") {
  const std::vector<double> xs{0.2, 0.4, 0.6, 0.8};
  const Summary s = summarize(xs);
  CHECK(s.n == 4);
  CHECK(s.mean == doctest::Approx(0.5));
  const double sd = std::sqrt((0.09 + 0.01 + 0.01 + 0.09) / 3.0);
  CHECK(s.ci95 == doctest::Approx(1.96 * sd / 2.0));
  CHECK(summarize(std::vector<double>{0.7}).ci95 == 0.0);
  CHECK(summarize({}).n == 0);
}

TEST_CASE("report serialisation") {
  EvalReport r;
  r.scene = "demo";
  r.config = "synthetic/zero-noise";
  MaterialAccuracy m;
  m.material = 1;
  m.name = "sphere";
  m.miou = {0.97, 0.01, 5};
  m.f1 = {0.98, 0.005, 5};
  m.precision = {0.99, 0.0, 5};
  m.recall = {0.96, 0.02, 5};
  r.accuracy.push_back(m);
  r.consistency = 0.0;
  r.robustness = 1.5;
  r.warnings.push_back("material 2 is unselectable; skipped");
  const auto j = r.to_json();
  CHECK(j["scene"] == "demo");
  CHECK(j["accuracy"][0]["miou"]["mean"] == doctest::Approx(0.97));
  CHECK(j["consistency_hamming_x100"] == 0.0);
  CHECK(j["warnings"].size() == 1);
  const auto table = r.to_table();
  CHECK(table.find("97.00") != std::string::npos);
  CHECK(table.find("sphere") != std::string::npos);
  CHECK(table.find("1.50") != std::string::npos);
  CHECK(table.find("warning: material 2") != std::string::npos);
}
