#include "thermofoot/components.hpp"

#include <algorithm>

namespace thermofoot {

Mask Component::to_mask(int rows, int cols) const {
  Mask m = Mask::Zero(rows, cols);
  for (const auto& p : pixels) m(p.row, p.col) = 1;
  return m;
}

std::vector<Component> connected_components(const Mask& mask) {
  const int rows = static_cast<int>(mask.rows());
  const int cols = static_cast<int>(mask.cols());
  Grid<int> label = Grid<int>::Constant(rows, cols, -1);
  std::vector<Component> out;
  std::vector<Pixel> stack;

  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (!mask(r, c) || label(r, c) >= 0) continue;
      const int id = static_cast<int>(out.size());
      Component comp;
      label(r, c) = id;
      stack.push_back({r, c});
      while (!stack.empty()) {
        const Pixel p = stack.back();
        stack.pop_back();
        comp.pixels.push_back(p);
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const int nr = p.row + dr, nc = p.col + dc;
            if (nr < 0 || nr >= rows || nc < 0 || nc >= cols) continue;
            if (!mask(nr, nc) || label(nr, nc) >= 0) continue;
            label(nr, nc) = id;
            stack.push_back({nr, nc});
          }
        }
      }
      std::sort(comp.pixels.begin(), comp.pixels.end(), [](const Pixel& a, const Pixel& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
      });
      double sr = 0.0, sc = 0.0;
      for (const auto& p : comp.pixels) {
        comp.bbox.extend(p.row, p.col);
        sr += p.row;
        sc += p.col;
      }
      comp.centroid_row = sr / comp.area();
      comp.centroid_col = sc / comp.area();
      out.push_back(std::move(comp));
    }
  }
  return out;
}

Mask dilate(const Mask& mask, int radius) {
  if (radius <= 0) return mask;
  const int rows = static_cast<int>(mask.rows());
  const int cols = static_cast<int>(mask.cols());
  // Separable: horizontal pass then vertical pass.
  Mask horizontal = Mask::Zero(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (!mask(r, c)) continue;
      const int lo = std::max(0, c - radius), hi = std::min(cols - 1, c + radius);
      for (int k = lo; k <= hi; ++k) horizontal(r, k) = 1;
    }
  Mask out = Mask::Zero(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (!horizontal(r, c)) continue;
      const int lo = std::max(0, r - radius), hi = std::min(rows - 1, r + radius);
      for (int k = lo; k <= hi; ++k) out(k, c) = 1;
    }
  return out;
}

} // namespace thermofoot
