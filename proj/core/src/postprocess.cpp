#include "matlift/postprocess.hpp"

#include <algorithm>

namespace matlift::postprocess {

namespace {

// One-dimensional window pass: out[i] = (all set in [i-r, i+r]) for erosion or
// (any set) for dilation, with out-of-range samples treated as unset.
void window_pass(const std::uint8_t* in, std::uint8_t* out, int n, std::ptrdiff_t stride, int r,
                 bool erosion) {
  // Prefix counts of set samples.
  std::vector<int> prefix(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + (in[i * stride] != 0);
  for (int i = 0; i < n; ++i) {
    const int lo = i - r;
    const int hi = i + r;
    const int set = prefix[std::min(hi, n - 1) + 1] - prefix[std::max(lo, 0)];
    if (erosion) {
      out[i * stride] = (lo >= 0 && hi < n && set == 2 * r + 1) ? 1 : 0;
    } else {
      out[i * stride] = set > 0 ? 1 : 0;
    }
  }
}

BinaryMask separable(const BinaryMask& mask, int radius, bool erosion) {
  if (radius <= 0) return mask;
  const int w = mask.width();
  const int h = mask.height();
  BinaryMask tmp(w, h, mask.view_id);
  BinaryMask out(w, h, mask.view_id);
  for (int y = 0; y < h; ++y) {
    window_pass(&mask.pixels.at(0, y), &tmp.pixels.at(0, y), w, 1, radius, erosion);
  }
  for (int x = 0; x < w && h > 0; ++x) {
    window_pass(&tmp.pixels.at(x, 0), &out.pixels.at(x, 0), h, w, radius, erosion);
  }
  return out;
}

ComponentLabels label(const BinaryMask& mask, bool value) {
  const int w = mask.width();
  const int h = mask.height();
  ComponentLabels out;
  out.labels = Raster<int>(w, h, 1, -1);
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (mask.get(x, y) != value || out.labels.at(x, y) >= 0) continue;
      const int id = out.count++;
      std::size_t area = 0;
      bool border = false;
      stack.assign(1, {x, y});
      out.labels.at(x, y) = id;
      while (!stack.empty()) {
        const auto [cx, cy] = stack.back();
        stack.pop_back();
        ++area;
        border |= cx == 0 || cy == 0 || cx == w - 1 || cy == h - 1;
        constexpr int dx[4] = {1, -1, 0, 0};
        constexpr int dy[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
          const int nx = cx + dx[k];
          const int ny = cy + dy[k];
          if (!mask.pixels.in_bounds(nx, ny) || mask.get(nx, ny) != value ||
              out.labels.at(nx, ny) >= 0) {
            continue;
          }
          out.labels.at(nx, ny) = id;
          stack.emplace_back(nx, ny);
        }
      }
      out.areas.push_back(area);
      out.touches_border.push_back(border);
    }
  }
  return out;
}

}  // namespace

BinaryMask erode(const BinaryMask& mask, int radius) { return separable(mask, radius, true); }

BinaryMask dilate(const BinaryMask& mask, int radius) { return separable(mask, radius, false); }

ComponentLabels connected_components(const BinaryMask& mask) { return label(mask, true); }

BinaryMask fill_holes(const BinaryMask& mask, std::size_t max_area) {
  if (max_area == 0) return mask;
  const auto holes = label(mask, false);
  BinaryMask out = mask;
  for (std::size_t i = 0; i < holes.labels.data().size(); ++i) {
    const int id = holes.labels[i];
    if (id >= 0 && !holes.touches_border[id] && holes.areas[id] <= max_area) out.pixels[i] = 1;
  }
  return out;
}

BinaryMask remove_sprinkles(const BinaryMask& mask, std::size_t min_area) {
  if (min_area == 0) return mask;
  const auto comps = label(mask, true);
  BinaryMask out = mask;
  for (std::size_t i = 0; i < comps.labels.data().size(); ++i) {
    const int id = comps.labels[i];
    if (id >= 0 && comps.areas[id] < min_area) out.pixels[i] = 0;
  }
  return out;
}

}  // namespace matlift::postprocess
