#pragma once

#include "thermofoot/grid.hpp"
#include "thermofoot/radiometry.hpp"
#include "thermofoot/segmentation.hpp"

#include <array>
#include <span>
#include <string>

namespace thermofoot {

/// 2-D affine map acting on (row, col) points: p' = linear * p + translation.
template <typename Scalar = double>
struct Affine2 {
  using Matrix = Eigen::Matrix<Scalar, 2, 3>;
  using Linear = Eigen::Matrix<Scalar, 2, 2>;
  using Vec = Eigen::Matrix<Scalar, 2, 1>;

  Matrix matrix = Matrix::Zero();

  static Affine2 identity() {
    Affine2 a;
    a.matrix.template leftCols<2>().setIdentity();
    return a;
  }
  static Affine2 from(const Linear& linear, const Vec& translation) {
    Affine2 a;
    a.matrix << linear, translation;
    return a;
  }

  Linear linear() const { return matrix.template leftCols<2>(); }
  Vec translation() const { return matrix.col(2); }
  Scalar determinant() const { return linear().determinant(); }
  bool reflects() const { return determinant() < Scalar(0); }
  bool invertible(Scalar tol = Scalar(1e-6)) const { return std::abs(determinant()) >= tol; }

  Vec operator()(const Vec& p) const { return linear() * p + translation(); }

  Affine2 inverse() const {
    const Linear inv = linear().inverse();
    return from(inv, -inv * translation());
  }

  /// (a * b)(p) == a(b(p))
  friend Affine2 operator*(const Affine2& a, const Affine2& b) {
    return from(a.linear() * b.linear(), a.linear() * b.translation() + a.translation());
  }

  template <typename Other>
  Affine2<Other> cast() const {
    return Affine2<Other>{matrix.template cast<Other>()};
  }
};

using AffineTransform = Affine2<double>;

enum class Foot { Left, Right };

std::string to_string(Foot foot);
Foot parse_foot(const std::string& text);
inline Foot opposite(Foot f) { return f == Foot::Left ? Foot::Right : Foot::Left; }

/// Four landmarks per foot, ordered: 1 toe tip, 2 and 3 the two metatarsal heads
/// (2 = the one nearer the image's left edge, i.e. smaller column), 4 heel centre.
struct LandmarkSet {
  Foot foot = Foot::Left;
  std::array<Point<>, 4> points{};

  const Point<>& operator[](int number) const { return points[static_cast<std::size_t>(number - 1)]; }

  /// Throws InvalidLandmarks on out-of-bounds, coincident 2/4, or collinear 1/2/4 points.
  void validate(int rows, int cols) const;
};

inline constexpr double kMinLandmarkTriangleArea = 4.0;

/// Rigid rotation about the midpoint of p2-p4 that makes the segment parallel to the column axis,
/// with p4 (heel) below p2.
AffineTransform vertical_alignment(const Point<>& p2, const Point<>& p4);

/// Exact affine map taking src[i] to dst[i].
AffineTransform affine_from_three(std::span<const Point<>, 3> src, std::span<const Point<>, 3> dst);

/// Inverse-maps every destination pixel through `t` and samples bilinearly. A
/// destination pixel is invalid if it samples outside the source or touches an
/// invalid source pixel with nonzero weight.
template <typename Scalar>
Grid<Scalar> warp_bilinear(const Grid<Scalar>& src, const AffineTransform& t);

/// Nearest-neighbour resampling for masks; samples outside the source are 0.
Mask warp_nearest(const Mask& src, const AffineTransform& t);

TemperatureMap warp(const TemperatureMap& map, const AffineTransform& t);
FootMask warp(const FootMask& mask, const AffineTransform& t);

struct AlignedPair {
  TemperatureMap reference;
  FootMask reference_mask;
  TemperatureMap moving;  // warped onto the reference foot
  FootMask moving_mask;   // warped
  Mask overlap;
  AffineTransform transform;  // moving -> reference coordinates
  AffineTransform reference_vertical;
  AffineTransform moving_vertical;
  Foot reference_foot = Foot::Left;
};

/// Maps the contralateral foot onto the reference foot from landmarks 1, 2, 4 of
/// the moving foot paired with 1, 3, 4 of the reference foot. Moving temperatures
/// outside the moving mask are invalidated before warping so the background never
/// bleeds into the comparison.
AlignedPair align_pair(const TemperatureMap& ref_map, const FootMask& ref_mask, const LandmarkSet& ref_landmarks,
                       const TemperatureMap& mov_map, const FootMask& mov_mask, const LandmarkSet& mov_landmarks);

} // namespace thermofoot
