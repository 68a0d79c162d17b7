#include "thermofoot/serialization.hpp"

#include "thermofoot/error.hpp"

#include <cmath>
#include <cstdio>
#include <functional>

namespace thermofoot {

using nlohmann::json;

void to_json(json& j, const View& v) {
  j = json{{"view", v.kind == ViewKind::Plantar ? "plantar" : "periphery"}};
  if (v.kind == ViewKind::Periphery) j["angle"] = v.angle_deg;
}

void from_json(const json& j, View& v) {
  const auto kind = j.at("view").get<std::string>();
  if (kind == "plantar") {
    v = View::plantar();
  } else if (kind == "periphery") {
    v = View::periphery(j.at("angle").get<int>());
  } else {
    throw Error(Errc::ParseError, "unknown view '" + kind + "'");
  }
}

void to_json(json& j, const CalibrationCurve& c) {
  j = json{{"slope", c.slope},
           {"intercept", c.intercept},
           {"residual_rms", c.residual_rms},
           {"nonlinearity_pct", c.nonlinearity_pct},
           {"sample_range", {c.sample_range_c.first, c.sample_range_c.second}}};
}

void from_json(const json& j, CalibrationCurve& c) {
  c.slope = j.at("slope").get<double>();
  c.intercept = j.at("intercept").get<double>();
  c.residual_rms = j.value("residual_rms", 0.0);
  c.nonlinearity_pct = j.value("nonlinearity_pct", 0.0);
  if (j.contains("sample_range")) {
    const auto& r = j.at("sample_range");
    c.sample_range_c = {r.at(0).get<double>(), r.at(1).get<double>()};
  }
}

void to_json(json& j, const Rect& r) {
  j = json{{"row", r.row}, {"col", r.col}, {"height", r.height}, {"width", r.width}};
}

void from_json(const json& j, Rect& r) {
  r.row = j.at("row").get<int>();
  r.col = j.at("col").get<int>();
  r.height = j.at("height").get<int>();
  r.width = j.at("width").get<int>();
}

void to_json(json& j, const BoundingBox& b) {
  j = json{{"min_row", b.min_row}, {"min_col", b.min_col}, {"max_row", b.max_row}, {"max_col", b.max_col}};
}

void from_json(const json& j, BoundingBox& b) {
  b.min_row = j.at("min_row").get<int>();
  b.min_col = j.at("min_col").get<int>();
  b.max_row = j.at("max_row").get<int>();
  b.max_col = j.at("max_col").get<int>();
}

void to_json(json& j, const Scribble& s) {
  j = json{{"row", s.pixel.row}, {"col", s.pixel.col}, {"label", s.foreground ? "foreground" : "background"}};
}

void from_json(const json& j, Scribble& s) {
  std::string label;
  if (j.is_array()) {
    s.pixel = {j.at(0).get<int>(), j.at(1).get<int>()};
    label = j.at(2).get<std::string>();
  } else {
    s.pixel = {j.at("row").get<int>(), j.at("col").get<int>()};
    label = j.at("label").get<std::string>();
  }
  if (label == "foreground" || label == "fg" || label == "DefiniteForeground")
    s.foreground = true;
  else if (label == "background" || label == "bg" || label == "DefiniteBackground")
    s.foreground = false;
  else
    throw Error(Errc::ParseError, "scribble label must be foreground or background, got '" + label + "'");
}

void to_json(json& j, const AffineTransform& t) {
  j = json::array();
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 3; ++c) j.push_back(t.matrix(r, c));
}

void from_json(const json& j, AffineTransform& t) {
  if (!j.is_array() || j.size() != 6) throw Error(Errc::ParseError, "transform must be 6 numbers, row-major");
  for (int k = 0; k < 6; ++k) t.matrix(k / 3, k % 3) = j.at(static_cast<std::size_t>(k)).get<double>();
}

void to_json(json& j, const AnalysisConfig& c) {
  json bands = json::array();
  for (const auto& b : c.roi_bands) bands.push_back({b.lo, b.hi});
  j = json{{"delta_threshold_c", c.delta_threshold_c},
           {"min_hotspot_px", c.min_hotspot_px},
           {"neighborhood_dilation_px", c.neighborhood_dilation_px},
           {"similarity_tol_c", c.similarity_tol_c},
           {"roi_bands", bands}};
}

void apply_config_overrides(AnalysisConfig& c, const json& j) {
  if (!j.is_object()) throw Error(Errc::ParseError, "config must be an object");
  if (j.contains("delta_threshold_c")) c.delta_threshold_c = j.at("delta_threshold_c").get<double>();
  if (j.contains("min_hotspot_px")) c.min_hotspot_px = j.at("min_hotspot_px").get<int>();
  if (j.contains("neighborhood_dilation_px"))
    c.neighborhood_dilation_px = j.at("neighborhood_dilation_px").get<int>();
  if (j.contains("similarity_tol_c")) c.similarity_tol_c = j.at("similarity_tol_c").get<double>();
  if (j.contains("roi_bands")) {
    const auto& b = j.at("roi_bands");
    if (!b.is_array() || b.size() != 3) throw Error(Errc::ParseError, "roi_bands must hold 3 intervals");
    for (std::size_t k = 0; k < 3; ++k) c.roi_bands[k] = {b.at(k).at(0).get<double>(), b.at(k).at(1).get<double>()};
  }
}

void from_json(const json& j, AnalysisConfig& c) {
  c = AnalysisConfig{};
  apply_config_overrides(c, j);
}

namespace {

Verdict parse_verdict(const std::string& s) {
  if (s == "Confirmed") return Verdict::Confirmed;
  if (s == "RejectedColdContralateral") return Verdict::RejectedColdContralateral;
  if (s == "Unset") return Verdict::Unset;
  throw Error(Errc::ParseError, "unknown verdict '" + s + "'");
}

Region parse_region(const std::string& s) {
  for (int k = 0; k < 4; ++k)
    if (to_string(static_cast<Region>(k)) == s) return static_cast<Region>(k);
  throw Error(Errc::ParseError, "unknown region '" + s + "'");
}

std::string mask_provenance_name(MaskProvenance p) {
  return p == MaskProvenance::Automatic ? "automatic" : "user_corrected";
}

} // namespace

void to_json(json& j, const Hotspot& h) {
  json pixels = json::array();
  for (const auto& p : h.pixels) pixels.push_back({p.row, p.col});
  j = json{{"reference_foot", to_string(h.reference_foot)},
           {"verdict", to_string(h.verdict)},
           {"bbox", h.bbox},
           {"area_px", h.area_px},
           {"area_cm2", h.area_cm2},
           {"mean_delta_c", h.mean_delta_c},
           {"peak_delta_c", h.peak_delta_c},
           {"region_mt_c", h.region_mt_c},
           {"extended_mt_c", h.extended_mt_c},
           {"degenerate_extended_region", h.degenerate_extended_region},
           {"roi_pixels", {{"toe", h.roi_pixels[0]}, {"metatarsal", h.roi_pixels[1]}, {"heel", h.roi_pixels[2]}}},
           {"pixels", pixels}};
}

void from_json(const json& j, Hotspot& h) {
  h.reference_foot = parse_foot(j.at("reference_foot").get<std::string>());
  h.verdict = parse_verdict(j.at("verdict").get<std::string>());
  h.bbox = j.at("bbox").get<BoundingBox>();
  h.area_px = j.at("area_px").get<int>();
  h.area_cm2 = j.at("area_cm2").get<double>();
  h.mean_delta_c = j.at("mean_delta_c").get<double>();
  h.peak_delta_c = j.at("peak_delta_c").get<double>();
  h.region_mt_c = j.at("region_mt_c").get<double>();
  h.extended_mt_c = j.at("extended_mt_c").get<double>();
  h.degenerate_extended_region = j.value("degenerate_extended_region", false);
  const auto& roi = j.at("roi_pixels");
  h.roi_pixels = {roi.at("toe").get<int>(), roi.at("metatarsal").get<int>(), roi.at("heel").get<int>()};
  h.pixels.clear();
  for (const auto& p : j.at("pixels")) h.pixels.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
}

void to_json(json& j, const RoiStats& s) {
  json rows = json::array();
  for (const auto& r : s.rows)
    rows.push_back({{"region", to_string(r.region)},
                    {"foot_a_mt_c", r.foot_a_mt_c},
                    {"foot_b_mt_c", r.foot_b_mt_c},
                    {"diff_c", r.diff_c}});
  j = json{{"foot_a", to_string(s.foot_a)}, {"foot_b", to_string(s.foot_b)}, {"rows", rows}};
}

void from_json(const json& j, RoiStats& s) {
  s.foot_a = parse_foot(j.at("foot_a").get<std::string>());
  s.foot_b = parse_foot(j.at("foot_b").get<std::string>());
  const auto& rows = j.at("rows");
  if (!rows.is_array() || rows.size() != 4) throw Error(Errc::ParseError, "roi_stats must hold 4 rows");
  for (std::size_t k = 0; k < 4; ++k) {
    auto& r = s.rows[k];
    r.region = parse_region(rows[k].at("region").get<std::string>());
    r.foot_a_mt_c = rows[k].at("foot_a_mt_c").get<double>();
    r.foot_b_mt_c = rows[k].at("foot_b_mt_c").get<double>();
    r.diff_c = rows[k].at("diff_c").get<double>();
  }
}

json landmarks_to_json(const LandmarkSet& l) {
  json pts = json::array();
  for (const auto& p : l.points) pts.push_back({p.x(), p.y()});
  return pts;
}

LandmarkSet landmarks_from_json(const json& j, Foot foot) {
  if (!j.is_array() || j.size() != 4)
    throw Error(Errc::ParseError, to_string(foot) + " landmarks must be 4 (row, col) pairs");
  LandmarkSet l;
  l.foot = foot;
  for (std::size_t k = 0; k < 4; ++k) l.points[k] = Point<>(j[k].at(0).get<double>(), j[k].at(1).get<double>());
  return l;
}

std::map<Foot, LandmarkSet> landmark_pairs_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::ParseError, "landmarks must be an object with left and right");
  std::map<Foot, LandmarkSet> out;
  for (Foot f : {Foot::Left, Foot::Right}) {
    const auto key = to_string(f);
    if (!j.contains(key)) throw Error(Errc::MissingField, "missing field: landmarks." + key);
    out[f] = landmarks_from_json(j.at(key), f);
  }
  return out;
}

json landmark_pairs_to_json(const std::map<Foot, LandmarkSet>& l) {
  json j = json::object();
  for (const auto& [foot, set] : l) j[to_string(foot)] = landmarks_to_json(set);
  return j;
}

void to_json(json& j, const Provenance& p) {
  json dirs = json::array();
  for (const auto& d : p.directions)
    dirs.push_back({{"reference_foot", to_string(d.reference_foot)},
                    {"transform", d.transform},
                    {"determinant", d.transform.determinant()},
                    {"overlap_px", d.overlap_px}});
  j = json{{"frame_id", p.frame_id},
           {"calibration", p.calibration ? json(*p.calibration) : json(nullptr)},
           {"init_rect", p.init_rect},
           {"scribbles", p.scribbles},
           {"grabcut_iterations", p.grabcut_iterations},
           {"mask_provenance", mask_provenance_name(p.mask_provenance)},
           {"segmentation_energies", p.segmentation_energies},
           {"landmarks", landmark_pairs_to_json(p.landmarks)},
           {"directions", dirs}};
}

void from_json(const json& j, Provenance& p) {
  p.frame_id = j.at("frame_id").get<std::string>();
  if (j.contains("calibration") && !j.at("calibration").is_null())
    p.calibration = j.at("calibration").get<CalibrationCurve>();
  p.init_rect = j.at("init_rect").get<Rect>();
  p.scribbles = j.at("scribbles").get<std::vector<Scribble>>();
  p.grabcut_iterations = j.at("grabcut_iterations").get<int>();
  p.mask_provenance = j.at("mask_provenance").get<std::string>() == "automatic" ? MaskProvenance::Automatic
                                                                                : MaskProvenance::UserCorrected;
  p.segmentation_energies = j.at("segmentation_energies").get<std::vector<double>>();
  p.landmarks = landmark_pairs_from_json(j.at("landmarks"));
  p.directions.clear();
  for (const auto& d : j.at("directions"))
    p.directions.push_back({parse_foot(d.at("reference_foot").get<std::string>()),
                            d.at("transform").get<AffineTransform>(), d.at("overlap_px").get<int>()});
}

void to_json(json& j, const AnalysisReport& r) {
  j = json{{"schema_version", r.schema_version},
           {"subject", r.subject},
           {"roi_stats", r.roi_stats},
           {"hotspots", r.hotspots},
           {"confirmed_count", r.confirmed_count()},
           {"confirmed_roi_fraction", r.confirmed_roi_fraction ? json(*r.confirmed_roi_fraction) : json(nullptr)},
           {"config", r.config},
           {"provenance", r.provenance}};
}

void from_json(const json& j, AnalysisReport& r) {
  r.schema_version = j.at("schema_version").get<int>();
  if (r.schema_version != kReportSchemaVersion)
    throw Error(Errc::ParseError, "unsupported report schema version " + std::to_string(r.schema_version));
  r.subject = j.at("subject").get<std::map<std::string, std::string>>();
  r.roi_stats = j.at("roi_stats").get<RoiStats>();
  r.hotspots = j.at("hotspots").get<std::vector<Hotspot>>();
  const auto& frac = j.at("confirmed_roi_fraction");
  r.confirmed_roi_fraction = frac.is_null() ? std::nullopt : std::optional<double>(frac.get<double>());
  r.config = j.at("config").get<AnalysisConfig>();
  r.provenance = j.at("provenance").get<Provenance>();
}

void to_json(json& j, const Lesion& l) {
  j = json{{"foot", to_string(l.foot)},
           {"shape", l.shape == LesionShape::Disc ? "disc" : "square"},
           {"delta_c", l.delta_c},
           {"u", l.u},
           {"v", l.v},
           {"radius", l.radius}};
}

void from_json(const json& j, Lesion& l) {
  l.foot = parse_foot(j.at("foot").get<std::string>());
  const auto shape = j.value("shape", std::string("disc"));
  if (shape != "disc" && shape != "square") throw Error(Errc::ParseError, "lesion shape must be disc or square");
  l.shape = shape == "disc" ? LesionShape::Disc : LesionShape::Square;
  l.delta_c = j.at("delta_c").get<double>();
  l.u = j.at("u").get<double>();
  l.v = j.at("v").get<double>();
  l.radius = j.value("radius", 3.0);
}

void to_json(json& j, const PhantomSpec& s) {
  json base = json::object(), placement = json::object();
  for (const auto& [f, t] : s.base_temp_c) base[to_string(f)] = t;
  for (const auto& [f, p] : s.placement)
    placement[to_string(f)] = {{"center", {p.center.x(), p.center.y()}},
                               {"rotation_deg", p.rotation_deg},
                               {"scale", p.scale}};
  j = json{{"width", s.width},
           {"height", s.height},
           {"background_temp_c", s.background_temp_c},
           {"base_temp_c", base},
           {"toe_offset_c", s.toe_offset_c},
           {"noise_sigma_c", s.noise_sigma_c},
           {"lesions", s.lesions},
           {"cold_patches", s.cold_patches},
           {"placement", placement},
           {"calibration", s.calibration},
           {"captured_at_ms", s.captured_at_ms},
           {"frame_prefix", s.frame_prefix}};
}

void from_json(const json& j, PhantomSpec& s) {
  s = PhantomSpec{};
  s.width = j.value("width", s.width);
  s.height = j.value("height", s.height);
  s.background_temp_c = j.value("background_temp_c", s.background_temp_c);
  if (j.contains("base_temp_c")) {
    const auto& b = j.at("base_temp_c");
    if (b.is_number()) {
      s.base_temp_c = {{Foot::Left, b.get<double>()}, {Foot::Right, b.get<double>()}};
    } else {
      for (auto it = b.begin(); it != b.end(); ++it) s.base_temp_c[parse_foot(it.key())] = it->get<double>();
    }
  }
  s.toe_offset_c = j.value("toe_offset_c", s.toe_offset_c);
  s.noise_sigma_c = j.value("noise_sigma_c", s.noise_sigma_c);
  if (j.contains("lesions")) s.lesions = j.at("lesions").get<std::vector<Lesion>>();
  if (j.contains("cold_patches")) s.cold_patches = j.at("cold_patches").get<std::vector<Lesion>>();
  if (j.contains("placement"))
    for (auto it = j.at("placement").begin(); it != j.at("placement").end(); ++it) {
      auto& p = s.placement[parse_foot(it.key())];
      const auto& v = *it;
      if (v.contains("center")) p.center = Point<>(v.at("center").at(0).get<double>(), v.at("center").at(1).get<double>());
      p.rotation_deg = v.value("rotation_deg", p.rotation_deg);
      p.scale = v.value("scale", p.scale);
    }
  if (j.contains("calibration")) s.calibration = j.at("calibration").get<CalibrationCurve>();
  s.captured_at_ms = j.value("captured_at_ms", s.captured_at_ms);
  s.frame_prefix = j.value("frame_prefix", s.frame_prefix);
}

json frame_sidecar(const RawFrame& frame) {
  json j = frame.view;
  j["format"] = "u16le";
  j["width"] = frame.counts.cols();
  j["height"] = frame.counts.rows();
  j["captured_at_ms"] = frame.captured_at_ms;
  j["frame_id"] = frame.frame_id;
  return j;
}

RawFrame frame_from_sidecar(const json& j) {
  try {
    RawFrame f;
    f.view = j.get<View>();
    f.captured_at_ms = j.value("captured_at_ms", std::int64_t{0});
    f.frame_id = j.at("frame_id").get<std::string>();
    if (j.value("format", std::string("u16le")) != "u16le")
      throw Error(Errc::ParseError, "frame sidecar format must be u16le");
    return f;
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string("frame sidecar: ") + e.what());
  }
}

json map_sidecar(const TemperatureMap& map) {
  json j = map.view;
  j["format"] = "f32le";
  j["width"] = map.cols();
  j["height"] = map.rows();
  j["source_frame"] = map.source_frame;
  return j;
}

TemperatureMap map_from_sidecar(const json& j) {
  try {
    TemperatureMap m;
    m.view = j.get<View>();
    m.source_frame = j.value("source_frame", std::string());
    if (j.value("format", std::string("f32le")) != "f32le")
      throw Error(Errc::ParseError, "temperature sidecar format must be f32le");
    return m;
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string("temperature sidecar: ") + e.what());
  }
}

json ground_truth_to_json(const GroundTruth& truth) {
  json anomalies = json::array();
  for (const auto& a : truth.anomalies)
    anomalies.push_back({{"foot", to_string(a.foot)},
                         {"kind", a.warm ? "lesion" : "cold_patch"},
                         {"delta_c", a.delta_c},
                         {"bbox", a.bbox},
                         {"area_px", a.pixels.size()},
                         {"expected_reference_foot", to_string(a.expected_reference())},
                         {"expected_verdict", a.expect_confirmed() ? "Confirmed" : "RejectedColdContralateral"}});
  json contralateral = json::object(), placement = json::object(), masks = json::object();
  for (const auto& [f, t] : truth.contralateral) contralateral[to_string(f)] = t;
  for (const auto& [f, t] : truth.placement) placement[to_string(f)] = t;
  for (const auto& [f, m] : truth.masks) masks[to_string(f)] = {{"area_px", m.cast<int>().sum()}};
  return json{{"landmarks", landmark_pairs_to_json(truth.landmarks)},
              {"anomalies", anomalies},
              {"contralateral_transform", contralateral},
              {"placement", placement},
              {"masks", masks}};
}

std::string roi_stats_csv(const RoiStats& stats) {
  std::string out = "region,foot_a_mt_c,foot_b_mt_c,diff_c\n";
  char buf[128];
  for (const auto& r : stats.rows) {
    std::snprintf(buf, sizeof buf, "%s,%.2f,%.2f,%.2f\n", to_string(r.region).c_str(), r.foot_a_mt_c,
                  r.foot_b_mt_c, r.diff_c);
    out += buf;
  }
  return out;
}

bool reports_agree(const json& a, const json& b, double tol, std::string* where) {
  auto fail = [&](const std::string& path) {
    if (where) *where = path.empty() ? "/" : path;
    return false;
  };
  std::function<bool(const json&, const json&, const std::string&)> walk = [&](const json& x, const json& y,
                                                                            const std::string& path) {
    if (x.is_number() && y.is_number()) {
      const double u = x.get<double>(), v = y.get<double>();
      return std::abs(u - v) <= tol ? true : fail(path);
    }
    if (x.type() != y.type()) return fail(path);
    if (x.is_object()) {
      if (x.size() != y.size()) return fail(path);
      for (auto it = x.begin(); it != x.end(); ++it) {
        if (!y.contains(it.key())) return fail(path + "/" + it.key());
        if (!walk(*it, y.at(it.key()), path + "/" + it.key())) return false;
      }
      return true;
    }
    if (x.is_array()) {
      if (x.size() != y.size()) return fail(path);
      for (std::size_t k = 0; k < x.size(); ++k)
        if (!walk(x[k], y[k], path + "/" + std::to_string(k))) return false;
      return true;
    }
    return x == y ? true : fail(path);
  };
  return walk(a, b, "");
}

} // namespace thermofoot
