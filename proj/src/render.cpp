#include "thermofoot/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace thermofoot {

namespace {

std::array<Rgb, 256> build_palette() {
  struct Anchor {
    double at;
    double r, g, b;
  };
  static constexpr Anchor anchors[] = {
      {0.0, 0, 0, 10},       {1.0 / 7, 40, 0, 110},  {2.0 / 7, 120, 0, 140},  {3.0 / 7, 190, 30, 100},
      {4.0 / 7, 230, 80, 30}, {5.0 / 7, 250, 150, 0}, {6.0 / 7, 255, 210, 40}, {1.0, 255, 250, 210},
  };
  std::array<Rgb, 256> p{};
  for (int i = 0; i < 256; ++i) {
    const double x = i / 255.0;
    std::size_t k = 0;
    while (k + 2 < std::size(anchors) && x > anchors[k + 1].at) ++k;
    const auto& a = anchors[k];
    const auto& b = anchors[k + 1];
    const double f = (x - a.at) / (b.at - a.at);
    auto mix = [&](double u, double v) { return static_cast<std::uint8_t>(std::lround(u + f * (v - u))); };
    p[static_cast<std::size_t>(i)] = {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
  }
  return p;
}

void outline(RgbImage& img, const BoundingBox& box, const Rgb& color, bool dashed) {
  if (box.empty()) return;
  int step = 0;
  auto plot = [&](int r, int c) {
    if (r < 0 || r >= img.rows || c < 0 || c >= img.cols) return;
    if (!dashed || (step / 2) % 2 == 0) img.set(r, c, color);
    ++step;
  };
  for (int c = box.min_col; c <= box.max_col; ++c) plot(box.min_row, c);
  for (int r = box.min_row + 1; r <= box.max_row; ++r) plot(r, box.max_col);
  if (box.max_row > box.min_row)
    for (int c = box.max_col - 1; c >= box.min_col; --c) plot(box.max_row, c);
  if (box.max_col > box.min_col)
    for (int r = box.max_row - 1; r > box.min_row; --r) plot(r, box.min_col);
}

} // namespace

const std::array<Rgb, 256>& thermal_palette() {
  static const std::array<Rgb, 256> palette = build_palette();
  return palette;
}

int palette_index(double temp_c, double lo, double hi) {
  if (!(hi > lo)) return 0;
  const double f = std::clamp((temp_c - lo) / (hi - lo), 0.0, 1.0);
  return static_cast<int>(std::floor(f * 255.0 + 0.5));
}

std::pair<double, double> valid_range(const TemperatureMap& map) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (Eigen::Index i = 0; i < map.temps.size(); ++i) {
    const float v = map.temps.data()[i];
    if (!is_valid(v)) continue;
    lo = std::min(lo, double(v));
    hi = std::max(hi, double(v));
  }
  if (lo > hi) return {0.0, 0.0};
  return {lo, hi};
}

RgbImage render_pseudocolor(const TemperatureMap& map, std::optional<std::pair<double, double>> range) {
  const auto [lo, hi] = range ? *range : valid_range(map);
  const auto& palette = thermal_palette();
  RgbImage img(map.rows(), map.cols());
  for (int r = 0; r < map.rows(); ++r)
    for (int c = 0; c < map.cols(); ++c) {
      const float v = map.temps(r, c);
      img.set(r, c, is_valid(v) ? palette[static_cast<std::size_t>(palette_index(v, lo, hi))] : kInvalidColor);
    }
  return img;
}

RgbImage render_overlay(const TemperatureMap& map, std::span<const Hotspot> hotspots,
                        std::optional<std::pair<double, double>> range) {
  RgbImage img = render_pseudocolor(map, range);
  // Rejected first so confirmed outlines win where they cross.
  for (const auto& h : hotspots)
    if (h.verdict != Verdict::Confirmed) outline(img, h.bbox, kRejectedColor, true);
  for (const auto& h : hotspots)
    if (h.verdict == Verdict::Confirmed) outline(img, h.bbox, kConfirmedColor, false);
  return img;
}

RgbImage render_mask(const Mask& mask) {
  RgbImage img(static_cast<int>(mask.rows()), static_cast<int>(mask.cols()));
  for (int r = 0; r < img.rows; ++r)
    for (int c = 0; c < img.cols; ++c) {
      const std::uint8_t v = mask(r, c) ? 255 : 0;
      img.set(r, c, {v, v, v});
    }
  return img;
}

} // namespace thermofoot
