#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>

namespace thermofoot {

/// Dense row-major image grid. Index as grid(row, col).
template <typename Scalar>
using Grid = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Binary mask, 0 = off, 1 = on.
using Mask = Grid<std::uint8_t>;

/// Image-plane point stored as (row, col).
template <typename Scalar = double>
using Point = Eigen::Matrix<Scalar, 2, 1>;

struct Pixel {
  int row = 0;
  int col = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// Axis-aligned rectangle, inclusive of its first row/col, exclusive of row+height / col+width.
struct Rect {
  int row = 0;
  int col = 0;
  int height = 0;
  int width = 0;

  int area() const { return height * width; }
  bool contains(int r, int c) const {
    return r >= row && r < row + height && c >= col && c < col + width;
  }
  friend bool operator==(const Rect&, const Rect&) = default;
};

/// Inclusive pixel bounding box.
struct BoundingBox {
  int min_row = 0;
  int min_col = 0;
  int max_row = -1;
  int max_col = -1;

  bool empty() const { return max_row < min_row || max_col < min_col; }
  void extend(int r, int c) {
    if (empty()) {
      min_row = max_row = r;
      min_col = max_col = c;
      return;
    }
    min_row = std::min(min_row, r);
    max_row = std::max(max_row, r);
    min_col = std::min(min_col, c);
    max_col = std::max(max_col, c);
  }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

template <typename Scalar>
constexpr Scalar invalid_value() {
  return std::numeric_limits<Scalar>::quiet_NaN();
}

template <typename Scalar>
bool is_valid(Scalar v) {
  return std::isfinite(v);
}

inline bool same_shape(const auto& a, const auto& b) {
  return a.rows() == b.rows() && a.cols() == b.cols();
}

} // namespace thermofoot
