#include "thermofoot/phantom.hpp"

#include "thermofoot/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace thermofoot {

namespace {

struct Ellipse {
  double u, v, au, av;
  bool contains(double pu, double pv) const {
    const double a = (pu - u) / au, b = (pv - v) / av;
    return a * a + b * b <= 1.0;
  }
};

// Heel, midfoot, forefoot, then the five toes from the big toe outward.
constexpr Ellipse kFootParts[] = {
    {30.0, 0.0, 13.0, 13.0},  {5.0, -2.0, 30.0, 13.0},  {-15.0, 0.0, 16.0, 17.0},
    {-34.0, -10.0, 7.0, 7.0}, {-32.0, -1.0, 4.0, 4.0},  {-30.0, 5.0, 3.5, 3.5},
    {-27.0, 10.0, 3.2, 3.2},  {-23.0, 14.0, 3.0, 3.0},
};

bool in_lesion(const Lesion& l, double u, double v) {
  if (l.shape == LesionShape::Disc) {
    const double du = u - l.u, dv = v - l.v;
    return du * du + dv * dv <= l.radius * l.radius;
  }
  return std::abs(u - l.u) <= l.radius && std::abs(v - l.v) <= l.radius;
}

AffineTransform placement_transform(const FootPlacement& p, Foot foot) {
  const double th = p.rotation_deg * std::numbers::pi / 180.0;
  Eigen::Matrix2d rot;
  rot << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  Eigen::Matrix2d mirror = Eigen::Matrix2d::Identity();
  if (foot == Foot::Right) mirror(1, 1) = -1.0;
  return AffineTransform::from(p.scale * rot * mirror, p.center);
}

void check_lesion_inside(const Lesion& l) {
  for (double du = -l.radius; du <= l.radius; du += 0.25)
    for (double dv = -l.radius; dv <= l.radius; dv += 0.25) {
      const double u = l.u + du, v = l.v + dv;
      if (in_lesion(l, u, v) && !in_canonical_foot(u, v))
        throw Error(Errc::LesionOutsideFoot, "lesion at canonical (" + std::to_string(l.u) + ", " +
                                                 std::to_string(l.v) + ") extends outside the foot");
    }
}

std::uint16_t to_counts(const CalibrationCurve& cal, double temp_c) {
  const double c = std::round(cal.counts_for(temp_c));
  return static_cast<std::uint16_t>(std::clamp(c, 0.0, 65535.0));
}

} // namespace

bool in_canonical_foot(double u, double v) {
  return std::any_of(std::begin(kFootParts), std::end(kFootParts),
                     [&](const Ellipse& e) { return e.contains(u, v); });
}

std::array<Point<>, 4> canonical_landmarks() {
  return {Point<>(-40.0, -10.0), Point<>(-20.0, -13.0), Point<>(-17.0, 13.0), Point<>(30.0, 0.0)};
}

std::string phantom_frame_prefix(const PhantomSpec& spec, std::uint64_t seed) {
  return spec.frame_prefix.empty() ? "phantom-s" + std::to_string(seed) : spec.frame_prefix;
}

Phantom generate(const PhantomSpec& spec, std::uint64_t seed) {
  if (spec.width <= 0 || spec.height <= 0) throw Error(Errc::InvalidArgument, "phantom size must be positive");
  if (!(spec.noise_sigma_c >= 0.0)) throw Error(Errc::InvalidArgument, "noise sigma must be >= 0");
  if (!spec.calibration.valid()) throw Error(Errc::InvalidArgument, "phantom calibration must have positive slope");
  for (const auto& l : spec.lesions) check_lesion_inside(l);
  for (const auto& l : spec.cold_patches) check_lesion_inside(l);

  const int rows = spec.height, cols = spec.width;
  Phantom out;
  GroundTruth& truth = out.truth;
  truth.scene = Grid<float>::Constant(rows, cols, static_cast<float>(spec.background_temp_c));
  truth.combined = Mask::Zero(rows, cols);

  std::map<Foot, AffineTransform> to_canonical;
  for (Foot foot : {Foot::Left, Foot::Right}) {
    truth.placement[foot] = placement_transform(spec.placement.at(foot), foot);
    to_canonical[foot] = truth.placement[foot].inverse();
    truth.masks[foot] = Mask::Zero(rows, cols);
  }

  auto add_anomaly = [&](const Lesion& l, bool warm) {
    LesionTruth t;
    t.foot = l.foot;
    t.warm = warm;
    t.delta_c = warm ? l.delta_c : -std::abs(l.delta_c);
    out.truth.anomalies.push_back(t);
  };
  for (const auto& l : spec.lesions) add_anomaly(l, true);
  for (const auto& l : spec.cold_patches) add_anomaly(l, false);

  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      for (Foot foot : {Foot::Left, Foot::Right}) {
        const Point<> q = to_canonical[foot](Point<>(r, c));
        const double u = q.x(), v = q.y();
        if (!in_canonical_foot(u, v)) continue;
        if (truth.combined(r, c)) throw Error(Errc::InvalidArgument, "phantom feet overlap");
        truth.masks[foot](r, c) = 1;
        truth.combined(r, c) = 1;

        double t = spec.base_temp_c.at(foot) + spec.toe_offset_c * std::clamp(-u / 41.0, 0.0, 1.0);
        std::size_t k = 0;
        for (const auto& group : {&spec.lesions, &spec.cold_patches}) {
          for (const auto& l : *group) {
            auto& at = truth.anomalies[k++];
            if (l.foot != foot || !in_lesion(l, u, v)) continue;
            t += at.delta_c;
            at.pixels.push_back({r, c});
            at.bbox.extend(r, c);
          }
        }
        truth.scene(r, c) = static_cast<float>(t);
      }

  for (Foot foot : {Foot::Left, Foot::Right}) {
    const auto canon = canonical_landmarks();
    Point<> med = truth.placement[foot](canon[1]);
    Point<> lat = truth.placement[foot](canon[2]);
    if (med.y() > lat.y()) std::swap(med, lat);
    LandmarkSet set;
    set.foot = foot;
    set.points = {truth.placement[foot](canon[0]), med, lat, truth.placement[foot](canon[3])};
    truth.landmarks[foot] = set;
  }
  for (Foot ref : {Foot::Left, Foot::Right})
    truth.contralateral[ref] = truth.placement[ref] * truth.placement[opposite(ref)].inverse();

  Grid<double> noisy = truth.scene.cast<double>();
  if (spec.noise_sigma_c > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, spec.noise_sigma_c);
    for (Eigen::Index i = 0; i < noisy.size(); ++i) noisy.data()[i] += noise(rng);
  }

  RawFrame& frame = out.plantar;
  frame.view = View::plantar();
  frame.captured_at_ms = spec.captured_at_ms;
  frame.frame_id = phantom_frame_prefix(spec, seed) + "-plantar";
  frame.counts = noisy.unaryExpr([&](double t) { return to_counts(spec.calibration, t); });
  return out;
}

RawFrame generate_periphery(const PhantomSpec& spec, int angle_deg, std::uint64_t seed) {
  const View view = View::periphery(angle_deg);
  const int rows = spec.height, cols = spec.width;
  const bool mirrored = angle_deg == 180;
  const int shape_angle = mirrored ? 0 : angle_deg;
  const double base = 0.5 * (spec.base_temp_c.at(Foot::Left) + spec.base_temp_c.at(Foot::Right));

  // Silhouettes in image coordinates scaled to the frame size.
  const double sr = rows / 120.0, sc = cols / 160.0;
  auto inside = [&](double r, double c) {
    r /= sr;
    c /= sc;
    auto ell = [&](double er, double ec, double ar, double ac) {
      const double a = (r - er) / ar, b = (c - ec) / ac;
      return a * a + b * b <= 1.0;
    };
    switch (shape_angle) {
      case 0:  // lateral view, toes towards larger columns
        return (r <= 88.0 && c >= 60.0 && c <= 90.0) || ell(95.0, 95.0, 13.0, 40.0);
      case 90:  // anterior view
        return (r <= 80.0 && c >= 62.0 && c <= 98.0) || ell(92.0, 80.0, 18.0, 22.0);
      default:  // 270, posterior view
        return (r <= 84.0 && c >= 64.0 && c <= 96.0) || ell(90.0, 80.0, 14.0, 17.0);
    }
  };

  std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(shape_angle + 1)));
  std::normal_distribution<double> noise(0.0, spec.noise_sigma_c > 0.0 ? spec.noise_sigma_c : 1.0);
  Grid<double> temps(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double t = inside(r, c) ? base + 1.0 * (1.0 - double(r) / rows) : spec.background_temp_c;
      if (spec.noise_sigma_c > 0.0) t += noise(rng);
      temps(r, c) = t;
    }
  if (mirrored) temps = temps.rowwise().reverse().eval();

  RawFrame frame;
  frame.view = view;
  frame.captured_at_ms = spec.captured_at_ms + 1000 * (1 + angle_deg / 90);
  char suffix[32];
  std::snprintf(suffix, sizeof suffix, "-periphery-%03d", angle_deg);
  frame.frame_id = phantom_frame_prefix(spec, seed) + suffix;
  frame.counts = temps.unaryExpr([&](double t) { return to_counts(spec.calibration, t); });
  return frame;
}

} // namespace thermofoot
