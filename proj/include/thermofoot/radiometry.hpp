#pragma once

#include "thermofoot/grid.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace thermofoot {

/// Geometry and noise characteristics of the long-wave radiometric sensor.
struct SensorSpec {
  int width = 160;
  int height = 120;
  double thermal_sensitivity_k = 0.05;
  double hfov_deg = 56.0;
  double dfov_deg = 71.0;
  // Distance at which the horizontal field of view spans 38 cm.
  double working_distance_m = 0.19 / std::tan(28.0 * 3.14159265358979323846 / 180.0);

  /// Side length of one pixel projected onto the object plane, in millimetres.
  double pixel_footprint_mm() const;
  /// Area of one pixel projected onto the object plane, in square centimetres.
  double pixel_area_cm2() const;
  bool valid() const;
};

enum class ViewKind : std::uint8_t { Plantar = 0, Periphery = 1 };

struct View {
  ViewKind kind = ViewKind::Plantar;
  int angle_deg = 0;  // only meaningful for Periphery; one of 0/90/180/270

  static View plantar() { return {}; }
  static View periphery(int angle);
  std::string label() const;
  friend bool operator==(const View&, const View&) = default;
};

bool valid_periphery_angle(int angle);

struct RawFrame {
  Grid<std::uint16_t> counts;
  View view;
  std::int64_t captured_at_ms = 0;  // Unix epoch milliseconds
  std::string frame_id;
};

struct CalibrationSample {
  double reference_temp_c = 0.0;
  double mean_counts = 0.0;
};

struct CalibrationCurve {
  double slope = 0.0;      // degC per count
  double intercept = 0.0;  // degC
  double residual_rms = 0.0;
  double nonlinearity_pct = 0.0;
  std::pair<double, double> sample_range_c{0.0, 0.0};

  template <typename Scalar>
  Scalar temperature(Scalar counts) const {
    return static_cast<Scalar>(slope * static_cast<double>(counts) + intercept);
  }
  double counts_for(double temp_c) const { return (temp_c - intercept) / slope; }
  bool valid() const { return slope > 0.0 && std::isfinite(intercept) && nonlinearity_pct >= 0.0; }
};

/// Calibrated temperatures in degC. Invalid pixels hold NaN.
struct TemperatureMap {
  Grid<float> temps;
  View view;
  std::string source_frame;

  int rows() const { return static_cast<int>(temps.rows()); }
  int cols() const { return static_cast<int>(temps.cols()); }
  bool valid(int r, int c) const { return is_valid(temps(r, c)); }
  Mask valid_mask() const;
};

inline constexpr double kMinPlausibleTempC = -40.0;
inline constexpr double kMaxPlausibleTempC = 120.0;

/// Least-squares straight line mapping mean counts to reference temperature.
CalibrationCurve fit_calibration(std::span<const CalibrationSample> samples);

/// Maximum absolute deviation from the curve over the largest reference temperature, in percent.
double nonlinearity_percent(std::span<const CalibrationSample> samples, const CalibrationCurve& curve);

double residual_rms(std::span<const CalibrationSample> samples, const CalibrationCurve& curve);

TemperatureMap counts_to_temperature(const RawFrame& frame, const CalibrationCurve& curve,
                                     const SensorSpec& sensor = {});

} // namespace thermofoot
