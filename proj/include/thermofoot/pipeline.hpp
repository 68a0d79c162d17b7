#pragma once

#include "thermofoot/analysis.hpp"
#include "thermofoot/radiometry.hpp"
#include "thermofoot/registration.hpp"
#include "thermofoot/segmentation.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace thermofoot {

/// Everything the plantar analysis needs, already loaded.
struct PipelineInputs {
  RawFrame plantar;
  CalibrationCurve calibration;
  std::optional<Rect> init_rect;  // default: frame inset by kDefaultRectMargin
  std::vector<Scribble> scribbles;
  GrabCutParams grabcut;
  std::map<Foot, LandmarkSet> landmarks;
  Foot reference_foot = Foot::Left;
  bool both_directions = true;
  AnalysisConfig config;
  SensorSpec sensor;
  std::map<std::string, std::string> subject;
};

inline constexpr int kDefaultRectMargin = 2;
Rect default_init_rect(int rows, int cols);

struct SegmentationOutcome {
  TemperatureMap map;
  GrabCutResult grabcut;
  FeetMasks feet;
  Rect init_rect;
};

struct PipelineResult {
  AnalysisReport report;
  SegmentationOutcome segmentation;
  std::map<Foot, RoiSet> rois;
  std::map<Foot, DiffMap> diffs;  // keyed by reference foot
};

/// Conversion, GrabCut and foot split; the first half of the analysis.
SegmentationOutcome segment_plantar(const RawFrame& plantar, const CalibrationCurve& calibration,
                                    std::optional<Rect> init_rect, const std::vector<Scribble>& scribbles,
                                    const GrabCutParams& params, const SensorSpec& sensor = {});

/// Full plantar analysis: segmentation, alignment, hotspot detection and
/// validation in both directions, ROI statistics and report assembly.
PipelineResult run_pipeline(const PipelineInputs& inputs);

// ---------------------------------------------------------------------------
// Session documents: the on-disk description of one analysis, shared by the CLI and the service.

inline constexpr int kSessionSchemaVersion = 1;

struct SessionDocument {
  std::filesystem::path base_dir;  // relative paths resolve against this
  nlohmann::json doc;

  static SessionDocument load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::filesystem::path resolve(const std::string& relative) const;

  /// Loads frames, calibration, landmarks, scribbles and config overrides.
  /// Missing required entries raise MissingField naming the field; landmarks are optional
  /// when `require_landmarks` is false.
  PipelineInputs inputs(bool require_landmarks = true) const;
};

/// Writes report.json, roi_stats.csv and overlay.png into `out_dir`; returns the report JSON.
nlohmann::json write_analysis_outputs(const PipelineResult& result, const std::filesystem::path& out_dir);

} // namespace thermofoot
