#include "thermofoot/radiometry.hpp"

#include "thermofoot/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace thermofoot {

double SensorSpec::pixel_footprint_mm() const {
  const double half = hfov_deg * std::numbers::pi / 360.0;
  return 2.0 * working_distance_m * std::tan(half) * 1000.0 / width;
}

double SensorSpec::pixel_area_cm2() const {
  const double side_cm = pixel_footprint_mm() / 10.0;
  return side_cm * side_cm;
}

bool SensorSpec::valid() const {
  return width > 0 && height > 0 && hfov_deg > 0.0 && hfov_deg < dfov_deg && dfov_deg < 180.0 &&
         working_distance_m > 0.0;
}

View View::periphery(int angle) {
  if (!valid_periphery_angle(angle))
    throw Error(Errc::InvalidAngle, "periphery angle must be one of 0, 90, 180, 270; got " +
                                        std::to_string(angle));
  return {ViewKind::Periphery, angle};
}

std::string View::label() const {
  if (kind == ViewKind::Plantar) return "plantar";
  return "periphery-" + std::to_string(angle_deg);
}

bool valid_periphery_angle(int angle) {
  return angle == 0 || angle == 90 || angle == 180 || angle == 270;
}

Mask TemperatureMap::valid_mask() const {
  return temps.unaryExpr([](float v) { return std::uint8_t(is_valid(v) ? 1 : 0); });
}

CalibrationCurve fit_calibration(std::span<const CalibrationSample> samples) {
  if (samples.size() < 3)
    throw Error(Errc::TooFewSamples, "calibration needs at least 3 samples, got " +
                                         std::to_string(samples.size()));

  const auto n = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd target(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    if (!(s.reference_temp_c >= 0.0 && s.reference_temp_c <= 100.0))
      throw Error(Errc::InvalidArgument, "reference temperature outside [0, 100] degC");
    design(i, 0) = s.mean_counts;
    design(i, 1) = 1.0;
    target(i) = s.reference_temp_c;
  }

  const double first = samples.front().mean_counts;
  const bool all_equal = std::all_of(samples.begin(), samples.end(),
                                     [&](const CalibrationSample& s) { return s.mean_counts == first; });
  if (all_equal)
    throw Error(Errc::DegenerateSamples, "all calibration samples share the same mean counts");

  // Centre the counts column so the QR solve stays well conditioned for large count offsets.
  const double counts_mean = design.col(0).mean();
  design.col(0).array() -= counts_mean;
  const Eigen::Vector2d solution = design.colPivHouseholderQr().solve(target);

  CalibrationCurve curve;
  curve.slope = solution(0);
  curve.intercept = solution(1) - solution(0) * counts_mean;
  if (!(curve.slope > 0.0))
    throw Error(Errc::DegenerateSamples, "fitted slope is not positive; counts must rise with temperature");

  auto [lo, hi] = std::minmax_element(samples.begin(), samples.end(),
                                      [](const auto& a, const auto& b) {
                                        return a.reference_temp_c < b.reference_temp_c;
                                      });
  curve.sample_range_c = {lo->reference_temp_c, hi->reference_temp_c};
  curve.residual_rms = residual_rms(samples, curve);
  curve.nonlinearity_pct = nonlinearity_percent(samples, curve);
  return curve;
}

double residual_rms(std::span<const CalibrationSample> samples, const CalibrationCurve& curve) {
  if (samples.empty()) throw Error(Errc::EmptySamples, "no calibration samples");
  double sum = 0.0;
  for (const auto& s : samples) {
    const double r = curve.temperature(s.mean_counts) - s.reference_temp_c;
    sum += r * r;
  }
  return std::sqrt(sum / static_cast<double>(samples.size()));
}

double nonlinearity_percent(std::span<const CalibrationSample> samples, const CalibrationCurve& curve) {
  if (samples.empty()) throw Error(Errc::EmptySamples, "no calibration samples");
  double max_dev = 0.0;
  double full_scale = 0.0;
  for (const auto& s : samples) {
    max_dev = std::max(max_dev, std::abs(curve.temperature(s.mean_counts) - s.reference_temp_c));
    full_scale = std::max(full_scale, s.reference_temp_c);
  }
  if (!(full_scale > 0.0))
    throw Error(Errc::InvalidArgument, "maximum reference temperature must be positive");
  return 100.0 * max_dev / full_scale;
}

TemperatureMap counts_to_temperature(const RawFrame& frame, const CalibrationCurve& curve,
                                     const SensorSpec& sensor) {
  if (frame.counts.rows() != sensor.height || frame.counts.cols() != sensor.width)
    throw Error(Errc::DimensionMismatch,
                "frame is " + std::to_string(frame.counts.cols()) + "x" +
                    std::to_string(frame.counts.rows()) + ", sensor expects " +
                    std::to_string(sensor.width) + "x" + std::to_string(sensor.height));

  TemperatureMap map;
  map.view = frame.view;
  map.source_frame = frame.frame_id;
  map.temps = frame.counts.unaryExpr([&](std::uint16_t c) {
    const double t = curve.temperature(static_cast<double>(c));
    return (t >= kMinPlausibleTempC && t <= kMaxPlausibleTempC) ? static_cast<float>(t)
                                                                 : invalid_value<float>();
  });
  return map;
}

} // namespace thermofoot
