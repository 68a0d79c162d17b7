#pragma once

#include "thermofoot/analysis.hpp"
#include "thermofoot/radiometry.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace thermofoot {

using Rgb = std::array<std::uint8_t, 3>;

/// Interleaved 8-bit RGB image.
struct RgbImage {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c * 3, 0) {}

  Rgb at(int r, int c) const {
    const auto i = (static_cast<std::size_t>(r) * cols + c) * 3;
    return {data[i], data[i + 1], data[i + 2]};
  }
  void set(int r, int c, const Rgb& v) {
    const auto i = (static_cast<std::size_t>(r) * cols + c) * 3;
    data[i] = v[0];
    data[i + 1] = v[1];
    data[i + 2] = v[2];
  }
};

/// 256-entry iron-style palette, dark (cold) to light (warm). Luminance never decreases with index.
const std::array<Rgb, 256>& thermal_palette();

inline constexpr Rgb kInvalidColor{0, 0, 0};
inline constexpr Rgb kConfirmedColor{255, 255, 255};
inline constexpr Rgb kRejectedColor{0, 255, 255};

/// Palette index for a temperature within [lo, hi], clamped.
int palette_index(double temp_c, double lo, double hi);

/// Min/max of valid pixels.
std::pair<double, double> valid_range(const TemperatureMap& map);

RgbImage render_pseudocolor(const TemperatureMap& map, std::optional<std::pair<double, double>> range = {});

/// Pseudocolour with each confirmed hotspot outlined by a solid rectangle on
/// its bounding box and rejected candidates by a dashed one.
RgbImage render_overlay(const TemperatureMap& map, std::span<const Hotspot> hotspots,
                        std::optional<std::pair<double, double>> range = {});

RgbImage render_mask(const Mask& mask);

} // namespace thermofoot
