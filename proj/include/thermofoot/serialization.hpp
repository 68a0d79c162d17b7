#pragma once

// JSON mappings for the domain types (nlohmann ADL hooks) plus sidecar helpers.

#include "thermofoot/analysis.hpp"
#include "thermofoot/phantom.hpp"
#include "thermofoot/radiometry.hpp"
#include "thermofoot/registration.hpp"
#include "thermofoot/segmentation.hpp"

#include <json.hpp>

namespace thermofoot {

void to_json(nlohmann::json& j, const View& v);
void from_json(const nlohmann::json& j, View& v);
void to_json(nlohmann::json& j, const CalibrationCurve& c);
void from_json(const nlohmann::json& j, CalibrationCurve& c);
void to_json(nlohmann::json& j, const Rect& r);
void from_json(const nlohmann::json& j, Rect& r);
void to_json(nlohmann::json& j, const BoundingBox& b);
void from_json(const nlohmann::json& j, BoundingBox& b);
void to_json(nlohmann::json& j, const Scribble& s);
void from_json(const nlohmann::json& j, Scribble& s);
void to_json(nlohmann::json& j, const AffineTransform& t);
void from_json(const nlohmann::json& j, AffineTransform& t);
void to_json(nlohmann::json& j, const AnalysisConfig& c);
void from_json(const nlohmann::json& j, AnalysisConfig& c);
void to_json(nlohmann::json& j, const Hotspot& h);
void from_json(const nlohmann::json& j, Hotspot& h);
void to_json(nlohmann::json& j, const RoiStats& s);
void from_json(const nlohmann::json& j, RoiStats& s);
void to_json(nlohmann::json& j, const Provenance& p);
void from_json(const nlohmann::json& j, Provenance& p);
void to_json(nlohmann::json& j, const AnalysisReport& r);
void from_json(const nlohmann::json& j, AnalysisReport& r);
void to_json(nlohmann::json& j, const Lesion& l);
void from_json(const nlohmann::json& j, Lesion& l);
void to_json(nlohmann::json& j, const PhantomSpec& s);
void from_json(const nlohmann::json& j, PhantomSpec& s);

/// Four (row, col) pairs, in landmark order.
nlohmann::json landmarks_to_json(const LandmarkSet& l);
LandmarkSet landmarks_from_json(const nlohmann::json& j, Foot foot);

/// {"left": [[r, c] x4], "right": [...]}; throws MissingField naming the absent key.
std::map<Foot, LandmarkSet> landmark_pairs_from_json(const nlohmann::json& j);
nlohmann::json landmark_pairs_to_json(const std::map<Foot, LandmarkSet>& l);

/// Overrides any subset of AnalysisConfig fields present in `j`.
void apply_config_overrides(AnalysisConfig& cfg, const nlohmann::json& j);

nlohmann::json frame_sidecar(const RawFrame& frame);
RawFrame frame_from_sidecar(const nlohmann::json& j);
nlohmann::json map_sidecar(const TemperatureMap& map);
TemperatureMap map_from_sidecar(const nlohmann::json& j);

nlohmann::json ground_truth_to_json(const GroundTruth& truth);

/// Table-layout CSV: header "region,foot_a_mt_c,foot_b_mt_c,diff_c", then Toe, Metatarsal, Heel, Overall.
std::string roi_stats_csv(const RoiStats& stats);

/// Numeric comparison of two report documents: every number must agree to `tol`, everything else exactly.
bool reports_agree(const nlohmann::json& a, const nlohmann::json& b, double tol, std::string* where = nullptr);

} // namespace thermofoot
