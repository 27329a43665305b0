#include "matlift/service/overlay.hpp"

#include <algorithm>
#include <cmath>

#include "matlift/error.hpp"

namespace matlift::service {

namespace {

std::uint8_t blend(std::uint8_t base, std::uint8_t over, double alpha) {
  return static_cast<std::uint8_t>(std::lround((1.0 - alpha) * base + alpha * over));
}

void check_rgb(const Raster<std::uint8_t>& rgb, int w, int h) {
  if (rgb.channels() != 3 || rgb.width() != w || rgb.height() != h) {
    fail(ErrorCode::kInvalidArgument, "overlay: image and overlay sizes differ");
  }
}

}  // namespace

std::optional<Overlay> parse_overlay(const std::string& name) {
  if (name.empty() || name == "none") return Overlay::kNone;
  if (name == "mask") return Overlay::kMask;
  if (name == "heatmap") return Overlay::kHeatmap;
  if (name == "segments") return Overlay::kSegments;
  return std::nullopt;
}

std::array<std::uint8_t, 3> heat_color(float value) {
  const double v = std::clamp(static_cast<double>(value), 0.0, 1.0);
  // Piecewise blue -> cyan -> yellow -> red.
  double r, g, b;
  if (v < 1.0 / 3.0) {
    const double t = v * 3.0;
    r = 0.0, g = t, b = 1.0;
  } else if (v < 2.0 / 3.0) {
    const double t = v * 3.0 - 1.0;
    r = t, g = 1.0, b = 1.0 - t;
  } else {
    const double t = v * 3.0 - 2.0;
    r = 1.0, g = 1.0 - t, b = 0.0;
  }
  auto q = [](double c) { return static_cast<std::uint8_t>(std::lround(255.0 * c)); };
  return {q(r), q(g), q(b)};
}

Raster<std::uint8_t> composite_mask(const Raster<std::uint8_t>& rgb, const BinaryMask& mask,
                                    std::array<std::uint8_t, 3> color, double alpha) {
  check_rgb(rgb, mask.width(), mask.height());
  Raster<std::uint8_t> out = rgb;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.get(x, y)) continue;
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = blend(rgb.at(x, y, c), color[c], alpha);
    }
  }
  return out;
}

Raster<std::uint8_t> composite_heatmap(const Raster<std::uint8_t>& rgb, const Raster<float>& heatmap,
                                       const Raster<std::int32_t>& material_id, double alpha) {
  check_rgb(rgb, heatmap.width(), heatmap.height());
  Raster<std::uint8_t> out = rgb;
  for (int y = 0; y < heatmap.height(); ++y) {
    for (int x = 0; x < heatmap.width(); ++x) {
      if (material_id.at(x, y) < 0) continue;
      const auto color = heat_color(heatmap.at(x, y));
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = blend(rgb.at(x, y, c), color[c], alpha);
    }
  }
  return out;
}

Raster<std::uint8_t> composite_labels(const Raster<std::uint8_t>& rgb,
                                      const Raster<std::int32_t>& labels,
                                      std::span<const std::array<std::uint8_t, 3>> colors,
                                      double alpha) {
  check_rgb(rgb, labels.width(), labels.height());
  Raster<std::uint8_t> out = rgb;
  for (int y = 0; y < labels.height(); ++y) {
    for (int x = 0; x < labels.width(); ++x) {
      const int l = labels.at(x, y);
      if (l < 0 || static_cast<std::size_t>(l) >= colors.size()) continue;
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = blend(rgb.at(x, y, c), colors[l][c], alpha);
    }
  }
  return out;
}

}  // namespace matlift::service
