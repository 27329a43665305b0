#pragma once

#include <cstddef>
#include <vector>

#include "matlift/raster.hpp"

namespace matlift::postprocess {

/// 4-connected component labels; unset pixels carry -1.
struct ComponentLabels {
  Raster<int> labels;
  int count = 0;
  std::vector<std::size_t> areas;  // indexed by label
  std::vector<bool> touches_border;
};

/// Square structuring element of side 2r+1; pixels outside the raster count as unset.
BinaryMask erode(const BinaryMask& mask, int radius);
BinaryMask dilate(const BinaryMask& mask, int radius);

/// Labels set pixels in raster order of first encounter.
ComponentLabels connected_components(const BinaryMask& mask);

/// Sets every background component of area <= max_area that does not touch the border.
BinaryMask fill_holes(const BinaryMask& mask, std::size_t max_area);

/// Clears every foreground component of area < min_area.
BinaryMask remove_sprinkles(const BinaryMask& mask, std::size_t min_area);

}  // namespace matlift::postprocess
