#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "matlift/raster.hpp"

namespace matlift::service {

enum class Overlay { kNone, kMask, kHeatmap, kSegments };

std::optional<Overlay> parse_overlay(const std::string& name);

inline constexpr double kOverlayAlpha = 0.5;
inline constexpr std::array<std::uint8_t, 3> kMaskColor{0, 255, 0};

/// Blue at 0 through cyan and yellow to red at 1.
std::array<std::uint8_t, 3> heat_color(float value);

/// Blends `color` over selected pixels of a 3-channel image.
Raster<std::uint8_t> composite_mask(const Raster<std::uint8_t>& rgb, const BinaryMask& mask,
                                    std::array<std::uint8_t, 3> color = kMaskColor,
                                    double alpha = kOverlayAlpha);

/// Blends the heat colour of every foreground pixel.
Raster<std::uint8_t> composite_heatmap(const Raster<std::uint8_t>& rgb, const Raster<float>& heatmap,
                                       const Raster<std::int32_t>& material_id,
                                       double alpha = kOverlayAlpha);

/// Blends the colour of each labelled pixel; negative labels are left as is.
Raster<std::uint8_t> composite_labels(const Raster<std::uint8_t>& rgb,
                                      const Raster<std::int32_t>& labels,
                                      std::span<const std::array<std::uint8_t, 3>> colors,
                                      double alpha = kOverlayAlpha);

}  // namespace matlift::service
