#pragma once

#include "thermofoot/grid.hpp"

#include <vector>

namespace thermofoot {

struct Component {
  std::vector<Pixel> pixels;
  BoundingBox bbox;
  double centroid_row = 0.0;
  double centroid_col = 0.0;

  int area() const { return static_cast<int>(pixels.size()); }
  Mask to_mask(int rows, int cols) const;
};

/// 8-connected components of the nonzero pixels, in raster order of their first pixel.
std::vector<Component> connected_components(const Mask& mask);

/// Binary dilation by a (2r+1)x(2r+1) square structuring element.
Mask dilate(const Mask& mask, int radius);

} // namespace thermofoot
