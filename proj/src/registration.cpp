#include "thermofoot/registration.hpp"

#include "thermofoot/error.hpp"

#include <cmath>

namespace thermofoot {

std::string to_string(Foot foot) { return foot == Foot::Left ? "left" : "right"; }

Foot parse_foot(const std::string& text) {
  if (text == "left") return Foot::Left;
  if (text == "right") return Foot::Right;
  throw Error(Errc::ParseError, "foot must be 'left' or 'right', got '" + text + "'");
}

namespace {

double triangle_area(const Point<>& a, const Point<>& b, const Point<>& c) {
  const Point<> u = b - a, v = c - a;
  return 0.5 * std::abs(u.x() * v.y() - u.y() * v.x());
}

// Values within this distance of an integer coordinate snap to it so exact
// integer mappings (identity, translations, mirrors) resample without blur.
constexpr double kSnap = 1e-9;

double snap(double x) {
  const double r = std::round(x);
  return std::abs(x - r) < kSnap ? r : x;
}

} // namespace

void LandmarkSet::validate(int rows, int cols) const {
  for (int i = 1; i <= 4; ++i) {
    const auto& p = (*this)[i];
    if (!(p.x() >= 0.0 && p.x() <= rows - 1 && p.y() >= 0.0 && p.y() <= cols - 1))
      throw Error(Errc::InvalidLandmarks, to_string(foot) + " landmark " + std::to_string(i) +
                                              " lies outside the image");
  }
  if (((*this)[2] - (*this)[4]).norm() == 0.0)
    throw Error(Errc::CoincidentPoints, to_string(foot) + " landmarks 2 and 4 coincide");
  if (triangle_area((*this)[1], (*this)[2], (*this)[4]) < kMinLandmarkTriangleArea)
    throw Error(Errc::CollinearPoints, to_string(foot) + " landmarks 1, 2, 4 are collinear");
}

AffineTransform vertical_alignment(const Point<>& p2, const Point<>& p4) {
  const Point<> d = p4 - p2;
  if (d.norm() == 0.0) throw Error(Errc::CoincidentPoints, "alignment points coincide");
  // Rotating by theta maps the row axis towards the column axis; undo the segment's angle.
  const double theta = -std::atan2(d.y(), d.x());
  Eigen::Matrix2d rot;
  rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  const Point<> mid = 0.5 * (p2 + p4);
  return AffineTransform::from(rot, mid - rot * mid);
}

AffineTransform affine_from_three(std::span<const Point<>, 3> src, std::span<const Point<>, 3> dst) {
  const double scale = std::max({1.0, (src[1] - src[0]).norm(), (src[2] - src[0]).norm()});
  if (triangle_area(src[0], src[1], src[2]) <= 1e-12 * scale * scale)
    throw Error(Errc::CollinearPoints, "source points are collinear");
  const double dscale = std::max({1.0, (dst[1] - dst[0]).norm(), (dst[2] - dst[0]).norm()});
  if (triangle_area(dst[0], dst[1], dst[2]) <= 1e-12 * dscale * dscale)
    throw Error(Errc::CollinearPoints, "destination points are collinear");

  Eigen::Matrix3d a;
  Eigen::Matrix<double, 3, 2> b;
  for (int i = 0; i < 3; ++i) {
    a.row(i) << src[static_cast<std::size_t>(i)].transpose(), 1.0;
    b.row(i) = dst[static_cast<std::size_t>(i)].transpose();
  }
  const Eigen::Matrix<double, 3, 2> x = a.fullPivLu().solve(b);
  AffineTransform t;
  t.matrix = x.transpose();
  return t;
}

template <typename Scalar>
Grid<Scalar> warp_bilinear(const Grid<Scalar>& src, const AffineTransform& t) {
  if (!t.invertible()) throw Error(Errc::SingularTransform, "transform is not invertible");
  const AffineTransform inv = t.inverse();
  const int rows = static_cast<int>(src.rows()), cols = static_cast<int>(src.cols());
  Grid<Scalar> out(rows, cols);

  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const Point<> q = inv(Point<>(r, c));
      const double sr = snap(q.x()), sc = snap(q.y());
      if (!(sr >= 0.0 && sr <= rows - 1 && sc >= 0.0 && sc <= cols - 1)) {
        out(r, c) = invalid_value<Scalar>();
        continue;
      }
      const int r0 = static_cast<int>(std::floor(sr)), c0 = static_cast<int>(std::floor(sc));
      const double fr = sr - r0, fc = sc - c0;
      double acc = 0.0;
      bool ok = true;
      for (int dr = 0; dr <= 1 && ok; ++dr)
        for (int dc = 0; dc <= 1; ++dc) {
          const double w = (dr ? fr : 1.0 - fr) * (dc ? fc : 1.0 - fc);
          if (w == 0.0) continue;
          const Scalar v = src(r0 + dr, c0 + dc);
          if (!is_valid(v)) {
            ok = false;
            break;
          }
          acc += w * static_cast<double>(v);
        }
      out(r, c) = ok ? static_cast<Scalar>(acc) : invalid_value<Scalar>();
    }
  return out;
}

template Grid<float> warp_bilinear(const Grid<float>&, const AffineTransform&);
template Grid<double> warp_bilinear(const Grid<double>&, const AffineTransform&);

Mask warp_nearest(const Mask& src, const AffineTransform& t) {
  if (!t.invertible()) throw Error(Errc::SingularTransform, "transform is not invertible");
  const AffineTransform inv = t.inverse();
  const int rows = static_cast<int>(src.rows()), cols = static_cast<int>(src.cols());
  Mask out = Mask::Zero(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const Point<> q = inv(Point<>(r, c));
      const long sr = std::lround(q.x()), sc = std::lround(q.y());
      if (sr < 0 || sr >= rows || sc < 0 || sc >= cols) continue;
      out(r, c) = src(sr, sc);
    }
  return out;
}

TemperatureMap warp(const TemperatureMap& map, const AffineTransform& t) {
  TemperatureMap out;
  out.temps = warp_bilinear(map.temps, t);
  out.view = map.view;
  out.source_frame = map.source_frame;
  return out;
}

FootMask warp(const FootMask& mask, const AffineTransform& t) {
  return FootMask{warp_nearest(mask.mask, t), mask.provenance};
}

AlignedPair align_pair(const TemperatureMap& ref_map, const FootMask& ref_mask, const LandmarkSet& ref_landmarks,
                       const TemperatureMap& mov_map, const FootMask& mov_mask, const LandmarkSet& mov_landmarks) {
  if (ref_landmarks.foot == mov_landmarks.foot)
    throw Error(Errc::InvalidLandmarks, "landmark sets must belong to opposite feet; both are " +
                                            to_string(ref_landmarks.foot));
  if (!same_shape(ref_map.temps, mov_map.temps) || !same_shape(ref_map.temps, ref_mask.mask) ||
      !same_shape(mov_map.temps, mov_mask.mask))
    throw Error(Errc::DimensionMismatch, "maps and masks must share dimensions");
  ref_landmarks.validate(ref_map.rows(), ref_map.cols());
  mov_landmarks.validate(mov_map.rows(), mov_map.cols());

  // Landmark 2 sits at the smaller column on both feet, so it is medial on one
  // foot and lateral on the other; pairing it with 3 yields the mirror.
  const std::array<Point<>, 3> src{mov_landmarks[1], mov_landmarks[2], mov_landmarks[4]};
  const std::array<Point<>, 3> dst{ref_landmarks[1], ref_landmarks[3], ref_landmarks[4]};

  AlignedPair pair;
  pair.reference_foot = ref_landmarks.foot;
  pair.transform = affine_from_three(src, dst);
  pair.reference_vertical = vertical_alignment(ref_landmarks[2], ref_landmarks[4]);
  pair.moving_vertical = vertical_alignment(mov_landmarks[2], mov_landmarks[4]);
  pair.reference = ref_map;
  pair.reference_mask = ref_mask;

  TemperatureMap masked = mov_map;
  for (Eigen::Index i = 0; i < masked.temps.size(); ++i)
    if (!mov_mask.mask.data()[i]) masked.temps.data()[i] = invalid_value<float>();
  pair.moving = warp(masked, pair.transform);
  pair.moving_mask = warp(mov_mask, pair.transform);
  pair.overlap = ref_mask.mask * pair.moving_mask.mask;
  return pair;
}

} // namespace thermofoot
