#pragma once

// Reference computations used as independent oracles by the tests and the acceptance run.

#include "thermofoot/grid.hpp"
#include "thermofoot/phantom.hpp"
#include "thermofoot/radiometry.hpp"
#include "thermofoot/registration.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

using namespace thermofoot;

/// Closed-form simple linear regression of temperature on counts.
inline std::pair<double, double> linreg(const std::vector<CalibrationSample>& s) {
  double mx = 0, my = 0;
  for (const auto& p : s) {
    mx += p.mean_counts;
    my += p.reference_temp_c;
  }
  mx /= s.size();
  my /= s.size();
  double sxy = 0, sxx = 0;
  for (const auto& p : s) {
    sxy += (p.mean_counts - mx) * (p.reference_temp_c - my);
    sxx += (p.mean_counts - mx) * (p.mean_counts - mx);
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

/// Maximum deviation from the line over maximum full-scale input, in percent, by direct loop.
inline double brute_nonlinearity(const std::vector<CalibrationSample>& s, double slope, double intercept) {
  double worst = 0, full = 0;
  for (const auto& p : s) {
    worst = std::max(worst, std::abs(slope * p.mean_counts + intercept - p.reference_temp_c));
    full = std::max(full, p.reference_temp_c);
  }
  return 100.0 * worst / full;
}

/// 41 bath readings from 25 to 45 degC in 0.5 degC steps off a known line, with an optional
/// parabolic bump peaking mid-range.
inline std::vector<CalibrationSample> bath_protocol(double slope, double intercept, double bump) {
  std::vector<CalibrationSample> s;
  for (int i = 0; i <= 40; ++i) {
    const double t = 25.0 + 0.5 * i;
    const double x = (t - 35.0) / 10.0;
    s.push_back({t + bump * (1.0 - x * x), (t - intercept) / slope});
  }
  return s;
}

inline double iou(const Mask& a, const Mask& b) {
  double inter = 0, uni = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    inter += a.data()[i] && b.data()[i];
    uni += a.data()[i] || b.data()[i];
  }
  return uni == 0 ? 1.0 : inter / uni;
}

inline bool non_increasing(const std::vector<double>& e) {
  for (std::size_t i = 1; i < e.size(); ++i)
    if (e[i] > e[i - 1] + 1e-9 * std::abs(e[i - 1])) return false;
  return true;
}

/// Mean of valid temperatures under a mask, accumulated in long double.
inline double brute_mean(const Grid<float>& t, const Mask& m) {
  long double sum = 0;
  long n = 0;
  for (Eigen::Index r = 0; r < t.rows(); ++r)
    for (Eigen::Index c = 0; c < t.cols(); ++c)
      if (m(r, c) && std::isfinite(t(r, c))) {
        sum += t(r, c);
        ++n;
      }
  return static_cast<double>(sum / n);
}

/// Phantom with jittered placement, pose and temperature; deterministic in `index`.
inline PhantomSpec corpus_spec(int index, double sigma) {
  std::mt19937_64 rng(1000 + index);
  std::uniform_real_distribution<double> rot(-6.0, 6.0), shift(-4.0, 4.0), scale(0.95, 1.05), base(30.5, 32.5);
  PhantomSpec spec;
  spec.noise_sigma_c = sigma;
  const double s = scale(rng), b = base(rng);
  spec.base_temp_c = {{Foot::Left, b}, {Foot::Right, b}};
  spec.placement[Foot::Left] = {{60.0 + shift(rng), 118.0 + shift(rng)}, -4.0 + rot(rng), s};
  spec.placement[Foot::Right] = {{60.0 + shift(rng), 42.0 + shift(rng)}, 4.0 + rot(rng), s};
  return spec;
}

/// Canonical lesion sites spread over toe, forefoot, midfoot and heel.
inline const std::vector<std::pair<double, double>>& lesion_sites() {
  static const std::vector<std::pair<double, double>> sites{{-34, -10}, {-20, -8}, {-18, 8}, {-5, -3}, {25, 0},
                                                            {28, 3},    {-28, -3}, {10, 0},  {-22, 0}, {20, -4}};
  return sites;
}

/// Random well-conditioned affine map.
inline AffineTransform random_affine(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> lin(-1.5, 1.5), tr(-40.0, 40.0);
  AffineTransform t;
  do {
    t.matrix << lin(rng), lin(rng), tr(rng), lin(rng), lin(rng), tr(rng);
  } while (std::abs(t.determinant()) < 0.2);
  return t;
}

/// Smooth temperature field without edges, for interpolation round trips.
inline TemperatureMap smooth_map(int rows, int cols) {
  TemperatureMap m;
  m.temps.resize(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      m.temps(r, c) = static_cast<float>(30.0 + 2.0 * std::sin(r / 17.0) + 1.5 * std::cos(c / 23.0));
  return m;
}

} // namespace oracle
