#pragma once

#include "thermofoot/grid.hpp"
#include "thermofoot/radiometry.hpp"
#include "thermofoot/registration.hpp"
#include "thermofoot/segmentation.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace thermofoot {

/// Half-open fraction [lo, hi) of foot length measured from the toe end.
struct Band {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double f) const { return f >= lo && f < hi; }
};

enum class Region { Toe = 0, Metatarsal = 1, Heel = 2, Overall = 3 };

/// Slack on the hotspot threshold for float32 temperature storage, whose resolution near
/// body temperature is about 2e-6 degC. Far below the sensor's 0.05 K sensitivity.
inline constexpr double kThresholdSlackC = 1e-5;
std::string to_string(Region region);

struct AnalysisConfig {
  double delta_threshold_c = 2.2;
  int min_hotspot_px = 4;
  int neighborhood_dilation_px = 7;
  double similarity_tol_c = 0.5;
  // Toe, metatarsal, heel; midfoot left unassigned.
  std::array<Band, 3> roi_bands{{{0.0, 0.20}, {0.20, 0.45}, {0.75, 1.0}}};

  void validate() const;
};

/// Signed reference-minus-contralateral temperature, NaN outside the overlap.
struct DiffMap {
  Grid<float> diff;
  Mask valid;
};

DiffMap diff_map(const AlignedPair& pair);

enum class Verdict { Unset, Confirmed, RejectedColdContralateral };
std::string to_string(Verdict verdict);

struct Hotspot {
  std::vector<Pixel> pixels;
  BoundingBox bbox;
  int area_px = 0;
  double area_cm2 = 0.0;
  double mean_delta_c = 0.0;
  double peak_delta_c = 0.0;
  double region_mt_c = 0.0;
  double extended_mt_c = 0.0;
  Verdict verdict = Verdict::Unset;
  /// Set when the extended neighbourhood held no pixels; verdict is then Confirmed.
  bool degenerate_extended_region = false;
  Foot reference_foot = Foot::Left;
  /// Pixel counts falling in the toe, metatarsal and heel ROIs of the reference foot.
  std::array<int, 3> roi_pixels{0, 0, 0};
};

/// Candidates: 8-connected components of diff >= threshold with at least min_hotspot_px pixels.
std::vector<Hotspot> detect_hotspots(const DiffMap& d, const AnalysisConfig& cfg,
                                     double pixel_area_cm2 = SensorSpec{}.pixel_area_cm2());

/// Compares the candidate's mean temperature on the reference foot with its
/// dilated surround (same foot, candidate excluded).
Hotspot neighborhood_validate(Hotspot h, const TemperatureMap& reference, const Mask& reference_mask,
                              const AnalysisConfig& cfg);

struct RoiSet {
  Mask foot;
  std::array<Mask, 3> bands;  // toe, metatarsal, heel

  const Mask& operator[](Region r) const {
    return r == Region::Overall ? foot : bands[static_cast<std::size_t>(r)];
  }
};

inline constexpr int kMinFootLengthPx = 20;

/// Band membership uses each pixel's row after the rigid vertical alignment.
RoiSet define_rois(const Mask& foot_mask, const AffineTransform& vertical, const AnalysisConfig& cfg);
RoiSet define_rois(const Mask& foot_mask, const LandmarkSet& landmarks, const AnalysisConfig& cfg);

/// Arithmetic mean of valid temperatures under the mask. Throws EmptyRoi.
double mean_temperature(const TemperatureMap& map, const Mask& region);

struct RoiRow {
  Region region = Region::Toe;
  double foot_a_mt_c = 0.0;
  double foot_b_mt_c = 0.0;
  double diff_c = 0.0;
};

struct RoiStats {
  Foot foot_a = Foot::Left;  // reference / suspect foot
  Foot foot_b = Foot::Right;
  std::array<RoiRow, 4> rows{};

  const RoiRow& operator[](Region r) const { return rows[static_cast<std::size_t>(r)]; }
};

RoiStats roi_stats(const TemperatureMap& map_a, const RoiSet& rois_a, Foot foot_a, const TemperatureMap& map_b,
                   const RoiSet& rois_b);

struct DirectionProvenance {
  Foot reference_foot = Foot::Left;
  AffineTransform transform;  // contralateral -> reference
  int overlap_px = 0;
};

struct Provenance {
  std::string frame_id;
  Rect init_rect;
  std::vector<Scribble> scribbles;
  int grabcut_iterations = 0;
  std::optional<CalibrationCurve> calibration;
  MaskProvenance mask_provenance = MaskProvenance::Automatic;
  std::vector<double> segmentation_energies;
  std::map<Foot, LandmarkSet> landmarks;
  std::vector<DirectionProvenance> directions;
};

inline constexpr int kReportSchemaVersion = 1;

struct AnalysisReport {
  int schema_version = kReportSchemaVersion;
  std::map<std::string, std::string> subject;
  RoiStats roi_stats;
  std::vector<Hotspot> hotspots;
  AnalysisConfig config;
  Provenance provenance;
  /// Share of confirmed-hotspot pixels inside toe, metatarsal or heel ROIs; empty with no confirmed hotspots.
  std::optional<double> confirmed_roi_fraction;

  int confirmed_count() const;
};

/// Tags each hotspot with ROI membership and computes the report-level ROI fraction.
AnalysisReport assemble_report(std::map<std::string, std::string> subject, RoiStats stats,
                               std::vector<Hotspot> hotspots, const std::map<Foot, RoiSet>& rois,
                               const AnalysisConfig& cfg, Provenance provenance);

} // namespace thermofoot
