#include "matlift/ivf_index.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "matlift/error.hpp"
#include "matlift/parallel.hpp"

namespace matlift::lift {

namespace {

constexpr std::uint32_t kLeafSize = 12;
constexpr std::size_t kAssignBlock = 4096;

struct Entry {
  Point3f p;
  std::uint32_t id;
};

struct KdNode {
  Point3f lo;
  Point3f hi;
  std::uint32_t begin = 0;
  std::uint32_t end = 0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  bool leaf = false;
};

struct Candidate {
  float d2;
  std::uint32_t id;
};

inline bool before(const Candidate& a, const Candidate& b) {
  return a.d2 < b.d2 || (a.d2 == b.d2 && a.id < b.id);
}

// Bounded max-heap on (d2, id) holding the k best candidates seen so far.
class TopK {
 public:
  void reset(int k) {
    k_ = static_cast<std::size_t>(k);
    items_.clear();
  }
  bool full() const { return items_.size() == k_; }
  float worst() const { return full() ? items_.front().d2 : std::numeric_limits<float>::infinity(); }
  void offer(float d2, std::uint32_t id) {
    const Candidate c{d2, id};
    if (items_.size() < k_) {
      items_.push_back(c);
      std::push_heap(items_.begin(), items_.end(), before);
    } else if (before(c, items_.front())) {
      std::pop_heap(items_.begin(), items_.end(), before);
      items_.back() = c;
      std::push_heap(items_.begin(), items_.end(), before);
    }
  }
  void drain(std::vector<Neighbor>& out) {
    std::sort_heap(items_.begin(), items_.end(), before);
    out.clear();
    out.reserve(items_.size());
    for (const auto& c : items_) out.push_back({c.id, std::sqrt(c.d2)});
  }

 private:
  std::size_t k_ = 0;
  std::vector<Candidate> items_;
};

// Lower bound of the squared distance from q to any point inside the box.
// Uses the same float operations as squared_distance, so it never exceeds the
// distance of a contained point.
inline float box_distance(const Point3f& q, const Point3f& lo, const Point3f& hi) {
  float g[3];
  for (int a = 0; a < 3; ++a) {
    if (q[a] < lo[a]) {
      g[a] = lo[a] - q[a];
    } else if (q[a] > hi[a]) {
      g[a] = q[a] - hi[a];
    } else {
      g[a] = 0.0f;
    }
  }
  return g[0] * g[0] + g[1] * g[1] + g[2] * g[2];
}

std::uint32_t nearest_centroid(const Point3f& p, const std::vector<Point3f>& centroids) {
  std::uint32_t best = 0;
  float best_d = std::numeric_limits<float>::infinity();
  for (std::uint32_t c = 0; c < centroids.size(); ++c) {
    const float d = squared_distance(p, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

void assign_all(const std::vector<Point3f>& points, std::span<const std::uint32_t> subset,
                const std::vector<Point3f>& centroids, std::vector<std::uint32_t>& labels) {
  const std::size_t n = subset.empty() ? points.size() : subset.size();
  labels.resize(n);
  const std::size_t blocks = (n + kAssignBlock - 1) / kAssignBlock;
  parallel_for(0, blocks, [&](std::size_t b) {
    const std::size_t hi = std::min(n, (b + 1) * kAssignBlock);
    for (std::size_t i = b * kAssignBlock; i < hi; ++i) {
      const Point3f& p = subset.empty() ? points[i] : points[subset[i]];
      labels[i] = nearest_centroid(p, centroids);
    }
  });
}

}  // namespace

struct IvfIndex::Structure {
  std::vector<Point3f> centroids;
  std::vector<std::uint32_t> offsets;  // list c spans [offsets[c], offsets[c+1])
  std::vector<Entry> entries;       // grouped by list, kd-ordered within a list
  std::vector<std::uint32_t> ids;   // entries[i].id, for list()
  std::vector<std::uint32_t> roots;
  std::vector<KdNode> nodes;
  std::size_t point_count = 0;
  double build_ms = 0.0;
  int iterations = 0;

  std::uint32_t build_kd(std::uint32_t begin, std::uint32_t end) {
    const auto index = static_cast<std::uint32_t>(nodes.size());
    nodes.emplace_back();
    KdNode node;
    node.begin = begin;
    node.end = end;
    node.lo = entries[begin].p;
    node.hi = entries[begin].p;
    for (std::uint32_t i = begin + 1; i < end; ++i) {
      for (int a = 0; a < 3; ++a) {
        node.lo[a] = std::min(node.lo[a], entries[i].p[a]);
        node.hi[a] = std::max(node.hi[a], entries[i].p[a]);
      }
    }
    int axis = 0;
    float extent = -1.0f;
    for (int a = 0; a < 3; ++a) {
      if (node.hi[a] - node.lo[a] > extent) {
        extent = node.hi[a] - node.lo[a];
        axis = a;
      }
    }
    if (end - begin <= kLeafSize || extent <= 0.0f) {
      node.leaf = true;
      nodes[index] = node;
      return index;
    }
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(entries.begin() + begin, entries.begin() + mid, entries.begin() + end,
                     [axis](const Entry& a, const Entry& b) {
                       return a.p[axis] < b.p[axis] || (a.p[axis] == b.p[axis] && a.id < b.id);
                     });
    node.left = build_kd(begin, mid);
    node.right = build_kd(mid, end);
    nodes[index] = node;
    return index;
  }

  void search_kd(std::uint32_t node_index, const Point3f& q, TopK& top) const {
    const KdNode& node = nodes[node_index];
    if (node.leaf) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        top.offer(squared_distance(q, entries[i].p), entries[i].id);
      }
      return;
    }
    const KdNode& l = nodes[node.left];
    const KdNode& r = nodes[node.right];
    const float dl = box_distance(q, l.lo, l.hi);
    const float dr = box_distance(q, r.lo, r.hi);
    const bool left_first = dl <= dr;
    const std::uint32_t first = left_first ? node.left : node.right;
    const std::uint32_t second = left_first ? node.right : node.left;
    const float d_first = left_first ? dl : dr;
    const float d_second = left_first ? dr : dl;
    // Equal bounds may still hide a tie with a smaller id, so prune only on >.
    if (!(top.full() && d_first > top.worst())) search_kd(first, q, top);
    if (!(top.full() && d_second > top.worst())) search_kd(second, q, top);
  }
};

IvfIndex IvfIndex::build(std::shared_ptr<const SimilarityCloud> cloud, const IvfParams& params) {
  const auto start = std::chrono::steady_clock::now();
  if (!cloud || cloud->empty()) fail(ErrorCode::kEmptyInput, "build_index: empty cloud");
  if (params.n_clusters < 1) fail(ErrorCode::kInvalidArgument, "build_index: n_clusters must be >= 1");
  cloud->validate();

  const auto& pts = cloud->points;
  const std::size_t n = pts.size();
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(params.n_clusters), n);
  std::mt19937_64 rng(params.seed);

  // Training subset, as coarse quantizers are usually fit on a sample.
  std::vector<std::uint32_t> sample;
  const std::size_t max_train = k * static_cast<std::size_t>(std::max(1, params.training_points_per_cluster));
  if (n > max_train) {
    std::vector<std::uint32_t> all(n);
    std::iota(all.begin(), all.end(), 0u);
    for (std::size_t i = 0; i < max_train; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(all[i], all[pick(rng)]);
    }
    sample.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(max_train));
    std::sort(sample.begin(), sample.end());
  } else {
    sample.resize(n);
    std::iota(sample.begin(), sample.end(), 0u);
  }
  const std::size_t m = sample.size();

  // k-means++ seeding.
  std::vector<Point3f> centroids;
  centroids.reserve(k);
  std::vector<double> d2(m, std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(m, false);
  std::size_t first = std::uniform_int_distribution<std::size_t>(0, m - 1)(rng);
  centroids.push_back(pts[sample[first]]);
  chosen[first] = true;
  while (centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double d = squared_distance(pts[sample[i]], centroids.back());
      d2[i] = std::min(d2[i], d);
      total += d2[i];
    }
    std::size_t pick = m;
    if (total > 0.0) {
      const double r = std::uniform_real_distribution<double>(0.0, total)(rng);
      double acc = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        acc += d2[i];
        if (acc > r && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
      if (pick == m) {
        for (std::size_t i = m; i-- > 0;) {
          if (d2[i] > 0.0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      // Every remaining sample coincides with a centroid.
      for (std::size_t i = 0; i < m; ++i) {
        if (!chosen[i]) {
          pick = i;
          break;
        }
      }
    }
    chosen[pick] = true;
    centroids.push_back(pts[sample[pick]]);
  }

  // Lloyd iterations on the sample.
  std::vector<std::uint32_t> labels;
  double previous_inertia = std::numeric_limits<double>::infinity();
  int iterations = 0;
  for (int it = 0; it < params.max_iterations; ++it) {
    assign_all(pts, sample, centroids, labels);
    ++iterations;
    double inertia = 0.0;
    std::vector<std::array<double, 3>> sums(k, {0.0, 0.0, 0.0});
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < m; ++i) {
      const Point3f& p = pts[sample[i]];
      inertia += squared_distance(p, centroids[labels[i]]);
      auto& s = sums[labels[i]];
      s[0] += p[0];
      s[1] += p[1];
      s[2] += p[2];
      ++counts[labels[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      const double inv = 1.0 / static_cast<double>(counts[c]);
      centroids[c] = {static_cast<float>(sums[c][0] * inv), static_cast<float>(sums[c][1] * inv),
                      static_cast<float>(sums[c][2] * inv)};
    }
    const double change = std::abs(previous_inertia - inertia);
    if (std::isfinite(previous_inertia) &&
        change <= params.tolerance * std::max(previous_inertia, 1e-30)) {
      break;
    }
    previous_inertia = inertia;
  }

  // Final assignment of every point; empty lists are dropped.
  assign_all(pts, {}, centroids, labels);
  std::vector<std::uint32_t> counts(k, 0);
  for (auto l : labels) ++counts[l];
  std::vector<std::uint32_t> remap(k, 0);
  auto s = std::make_shared<Structure>();
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    remap[c] = static_cast<std::uint32_t>(s->centroids.size());
    s->centroids.push_back(centroids[c]);
  }
  const std::size_t lists = s->centroids.size();
  s->offsets.assign(lists + 1, 0);
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] != 0) s->offsets[remap[c] + 1] = counts[c];
  }
  std::partial_sum(s->offsets.begin(), s->offsets.end(), s->offsets.begin());
  s->entries.resize(n);
  std::vector<std::uint32_t> cursor(s->offsets.begin(), s->offsets.end() - 1);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t slot = cursor[remap[labels[i]]]++;
    s->entries[slot] = {pts[i], i};
  }
  s->roots.resize(lists);
  s->nodes.reserve(4 * n / kLeafSize + lists);
  for (std::size_t c = 0; c < lists; ++c) s->roots[c] = s->build_kd(s->offsets[c], s->offsets[c + 1]);
  s->ids.resize(n);
  for (std::size_t i = 0; i < n; ++i) s->ids[i] = s->entries[i].id;

  s->point_count = n;
  s->iterations = iterations;
  s->build_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return IvfIndex(std::move(s), std::move(cloud));
}

void IvfIndex::search(const Point3f& query, int k, int n_probe, std::vector<Neighbor>& out) const {
  out.clear();
  if (k < 1) return;
  const Structure& s = *structure_;
  const std::size_t lists = s.centroids.size();
  const std::size_t probes = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(n_probe, 1)), 1, lists);

  thread_local std::vector<Candidate> ranked;
  thread_local TopK top;
  ranked.resize(lists);
  for (std::uint32_t c = 0; c < lists; ++c) ranked[c] = {squared_distance(query, s.centroids[c]), c};
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(probes),
                    ranked.end(), before);

  top.reset(k);
  for (std::size_t p = 0; p < probes; ++p) {
    const std::uint32_t root = s.roots[ranked[p].id];
    const KdNode& node = s.nodes[root];
    if (top.full() && box_distance(query, node.lo, node.hi) > top.worst()) continue;
    s.search_kd(root, query, top);
  }
  top.drain(out);
}

std::vector<Neighbor> IvfIndex::search(const Point3f& query, int k, int n_probe) const {
  std::vector<Neighbor> out;
  search(query, k, n_probe, out);
  return out;
}

IvfIndex IvfIndex::with_values(std::shared_ptr<const SimilarityCloud> cloud) const {
  if (!cloud || cloud->size() != structure_->point_count) {
    fail(ErrorCode::kInvalidArgument, "with_values: cloud size differs from the indexed cloud");
  }
  cloud->validate();
  return IvfIndex(structure_, std::move(cloud));
}

std::size_t IvfIndex::cluster_count() const { return structure_->centroids.size(); }

std::span<const Point3f> IvfIndex::centroids() const { return structure_->centroids; }

std::span<const std::uint32_t> IvfIndex::list(std::size_t cluster) const {
  const auto& s = *structure_;
  return std::span<const std::uint32_t>(s.ids).subspan(s.offsets[cluster],
                                                       s.offsets[cluster + 1] - s.offsets[cluster]);
}

double IvfIndex::build_ms() const { return structure_->build_ms; }

int IvfIndex::iterations() const { return structure_->iterations; }

std::vector<Neighbor> brute_force_knn(const SimilarityCloud& cloud, const Point3f& query, int k) {
  TopK top;
  top.reset(std::max(k, 0));
  if (k < 1) return {};
  for (std::uint32_t i = 0; i < cloud.size(); ++i) top.offer(squared_distance(query, cloud.points[i]), i);
  std::vector<Neighbor> out;
  top.drain(out);
  return out;
}

}  // namespace matlift::lift
