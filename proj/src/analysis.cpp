#include "thermofoot/analysis.hpp"

#include "thermofoot/components.hpp"
#include "thermofoot/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace thermofoot {

std::string to_string(Region region) {
  switch (region) {
    case Region::Toe: return "Toe";
    case Region::Metatarsal: return "Metatarsal";
    case Region::Heel: return "Heel";
    case Region::Overall: return "Overall";
  }
  return "?";
}

std::string to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::Unset: return "Unset";
    case Verdict::Confirmed: return "Confirmed";
    case Verdict::RejectedColdContralateral: return "RejectedColdContralateral";
  }
  return "?";
}

void AnalysisConfig::validate() const {
  if (!(delta_threshold_c > 0.0)) throw Error(Errc::InvalidArgument, "delta_threshold_c must be positive");
  if (min_hotspot_px < 1) throw Error(Errc::InvalidArgument, "min_hotspot_px must be >= 1");
  if (neighborhood_dilation_px < 1) throw Error(Errc::InvalidArgument, "neighborhood_dilation_px must be >= 1");
  if (!(similarity_tol_c >= 0.0)) throw Error(Errc::InvalidArgument, "similarity_tol_c must be >= 0");
  for (const auto& b : roi_bands)
    if (!(b.lo >= 0.0 && b.hi <= 1.0 && b.lo < b.hi))
      throw Error(Errc::InvalidArgument, "ROI bands must be nonempty intervals within [0, 1]");
  for (std::size_t i = 0; i < roi_bands.size(); ++i)
    for (std::size_t j = i + 1; j < roi_bands.size(); ++j)
      if (roi_bands[i].lo < roi_bands[j].hi && roi_bands[j].lo < roi_bands[i].hi)
        throw Error(Errc::InvalidArgument, "ROI bands must be pairwise disjoint");
}

DiffMap diff_map(const AlignedPair& pair) {
  const auto& ref = pair.reference.temps;
  const auto& mov = pair.moving.temps;
  DiffMap d;
  d.diff.resize(ref.rows(), ref.cols());
  d.valid = Mask::Zero(ref.rows(), ref.cols());
  int count = 0;
  for (Eigen::Index i = 0; i < ref.size(); ++i) {
    const float a = ref.data()[i], b = mov.data()[i];
    if (pair.overlap.data()[i] && is_valid(a) && is_valid(b)) {
      d.diff.data()[i] = a - b;
      d.valid.data()[i] = 1;
      ++count;
    } else {
      d.diff.data()[i] = invalid_value<float>();
    }
  }
  if (count == 0) throw Error(Errc::EmptyOverlap, "aligned feet do not overlap");
  return d;
}

std::vector<Hotspot> detect_hotspots(const DiffMap& d, const AnalysisConfig& cfg, double pixel_area_cm2) {
  const Mask hot = d.diff.unaryExpr([&](float v) {
    return std::uint8_t(is_valid(v) && double(v) >= cfg.delta_threshold_c - kThresholdSlackC);
  });
  std::vector<Hotspot> out;
  for (auto& comp : connected_components(hot)) {
    if (comp.area() < cfg.min_hotspot_px) continue;
    Hotspot h;
    h.bbox = comp.bbox;
    h.area_px = comp.area();
    h.area_cm2 = h.area_px * pixel_area_cm2;
    double sum = 0.0, peak = -std::numeric_limits<double>::infinity();
    for (const auto& p : comp.pixels) {
      const double v = d.diff(p.row, p.col);
      sum += v;
      peak = std::max(peak, v);
    }
    h.mean_delta_c = sum / h.area_px;
    h.peak_delta_c = peak;
    h.pixels = std::move(comp.pixels);
    out.push_back(std::move(h));
  }
  return out;
}

Hotspot neighborhood_validate(Hotspot h, const TemperatureMap& reference, const Mask& reference_mask,
                              const AnalysisConfig& cfg) {
  const int rows = reference.rows(), cols = reference.cols();
  Mask candidate = Mask::Zero(rows, cols);
  for (const auto& p : h.pixels) candidate(p.row, p.col) = 1;
  h.region_mt_c = mean_temperature(reference, candidate);

  Mask extended = dilate(candidate, cfg.neighborhood_dilation_px) * reference_mask * (candidate == 0).cast<std::uint8_t>();
  double sum = 0.0;
  int n = 0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (extended(r, c) && reference.valid(r, c)) {
        sum += reference.temps(r, c);
        ++n;
      }
  if (n == 0) {
    h.degenerate_extended_region = true;
    h.extended_mt_c = h.region_mt_c;
    h.verdict = Verdict::Confirmed;
    return h;
  }
  h.extended_mt_c = sum / n;
  h.verdict = (h.region_mt_c - h.extended_mt_c > cfg.similarity_tol_c) ? Verdict::Confirmed
                                                                       : Verdict::RejectedColdContralateral;
  return h;
}

RoiSet define_rois(const Mask& foot_mask, const AffineTransform& vertical, const AnalysisConfig& cfg) {
  const int rows = static_cast<int>(foot_mask.rows()), cols = static_cast<int>(foot_mask.cols());
  Grid<double> aligned_row = Grid<double>::Zero(rows, cols);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (!foot_mask(r, c)) continue;
      // Rows of a pure rotation can carry 1e-15 noise; keep band edges exact.
      const double v = std::round(vertical(Point<>(r, c)).x() * 1e9) / 1e9;
      aligned_row(r, c) = v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  const double length = hi - lo + 1.0;
  if (!(length >= kMinFootLengthPx))
    throw Error(Errc::MaskTooSmall, "foot length below " + std::to_string(kMinFootLengthPx) + " px");

  RoiSet rois;
  rois.foot = foot_mask;
  for (auto& b : rois.bands) b = Mask::Zero(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (!foot_mask(r, c)) continue;
      const double f = (aligned_row(r, c) - lo) / length;
      for (std::size_t k = 0; k < 3; ++k)
        if (cfg.roi_bands[k].contains(f)) rois.bands[k](r, c) = 1;
    }
  return rois;
}

RoiSet define_rois(const Mask& foot_mask, const LandmarkSet& landmarks, const AnalysisConfig& cfg) {
  return define_rois(foot_mask, vertical_alignment(landmarks[2], landmarks[4]), cfg);
}

double mean_temperature(const TemperatureMap& map, const Mask& region) {
  double sum = 0.0;
  long n = 0;
  for (Eigen::Index i = 0; i < map.temps.size(); ++i) {
    const float v = map.temps.data()[i];
    if (region.data()[i] && is_valid(v)) {
      sum += v;
      ++n;
    }
  }
  if (n == 0) throw Error(Errc::EmptyRoi, "region holds no valid temperature pixels");
  return sum / static_cast<double>(n);
}

RoiStats roi_stats(const TemperatureMap& map_a, const RoiSet& rois_a, Foot foot_a, const TemperatureMap& map_b,
                   const RoiSet& rois_b) {
  RoiStats s;
  s.foot_a = foot_a;
  s.foot_b = opposite(foot_a);
  for (int k = 0; k < 4; ++k) {
    const auto region = static_cast<Region>(k);
    auto& row = s.rows[static_cast<std::size_t>(k)];
    row.region = region;
    try {
      row.foot_a_mt_c = mean_temperature(map_a, rois_a[region]);
      row.foot_b_mt_c = mean_temperature(map_b, rois_b[region]);
    } catch (const Error& e) {
      throw Error(Errc::EmptyRoi, to_string(region) + ": " + e.what());
    }
    row.diff_c = std::abs(row.foot_a_mt_c - row.foot_b_mt_c);
  }
  return s;
}

int AnalysisReport::confirmed_count() const {
  return static_cast<int>(std::count_if(hotspots.begin(), hotspots.end(),
                                        [](const Hotspot& h) { return h.verdict == Verdict::Confirmed; }));
}

AnalysisReport assemble_report(std::map<std::string, std::string> subject, RoiStats stats,
                               std::vector<Hotspot> hotspots, const std::map<Foot, RoiSet>& rois,
                               const AnalysisConfig& cfg, Provenance provenance) {
  long confirmed_px = 0, in_roi_px = 0;
  for (auto& h : hotspots) {
    h.roi_pixels = {0, 0, 0};
    const auto it = rois.find(h.reference_foot);
    if (it == rois.end()) continue;
    for (const auto& p : h.pixels) {
      bool any = false;
      for (std::size_t k = 0; k < 3; ++k)
        if (it->second.bands[k](p.row, p.col)) {
          ++h.roi_pixels[k];
          any = true;
        }
      if (h.verdict == Verdict::Confirmed) {
        ++confirmed_px;
        in_roi_px += any ? 1 : 0;
      }
    }
  }

  AnalysisReport report;
  report.subject = std::move(subject);
  report.roi_stats = stats;
  report.hotspots = std::move(hotspots);
  report.config = cfg;
  report.provenance = std::move(provenance);
  if (confirmed_px > 0) report.confirmed_roi_fraction = double(in_roi_px) / double(confirmed_px);
  return report;
}

} // namespace thermofoot
