#include "thermofoot/pipeline.hpp"

#include "thermofoot/error.hpp"
#include "thermofoot/io.hpp"
#include "thermofoot/render.hpp"
#include "thermofoot/serialization.hpp"

namespace thermofoot {

namespace fs = std::filesystem;
using nlohmann::json;

Rect default_init_rect(int rows, int cols) {
  return {kDefaultRectMargin, kDefaultRectMargin, rows - 2 * kDefaultRectMargin, cols - 2 * kDefaultRectMargin};
}

SegmentationOutcome segment_plantar(const RawFrame& plantar, const CalibrationCurve& calibration,
                                    std::optional<Rect> init_rect, const std::vector<Scribble>& scribbles,
                                    const GrabCutParams& params, const SensorSpec& sensor) {
  if (plantar.view.kind != ViewKind::Plantar)
    throw Error(Errc::InvalidArgument, "analysis requires a plantar frame, got " + plantar.view.label());
  SegmentationOutcome out;
  out.map = counts_to_temperature(plantar, calibration, sensor);
  out.init_rect = init_rect ? *init_rect : default_init_rect(out.map.rows(), out.map.cols());
  out.grabcut = grabcut(normalize_for_segmentation(out.map), out.init_rect, scribbles, params);
  out.feet = split_feet(out.grabcut.mask);
  return out;
}

PipelineResult run_pipeline(const PipelineInputs& in) {
  in.config.validate();
  for (Foot f : {Foot::Left, Foot::Right})
    if (!in.landmarks.contains(f))
      throw Error(Errc::MissingField, "missing field: landmarks." + to_string(f));

  PipelineResult result;
  result.segmentation = segment_plantar(in.plantar, in.calibration, in.init_rect, in.scribbles, in.grabcut, in.sensor);
  const auto& map = result.segmentation.map;
  const std::map<Foot, const FootMask*> feet{{Foot::Left, &result.segmentation.feet.left},
                                             {Foot::Right, &result.segmentation.feet.right}};

  Provenance prov;
  prov.frame_id = in.plantar.frame_id;
  prov.calibration = in.calibration;
  prov.init_rect = result.segmentation.init_rect;
  prov.scribbles = in.scribbles;
  prov.grabcut_iterations = in.grabcut.iterations;
  prov.mask_provenance = result.segmentation.grabcut.mask.provenance;
  prov.segmentation_energies = result.segmentation.grabcut.energies;
  prov.landmarks = in.landmarks;

  std::vector<Foot> directions{in.reference_foot};
  if (in.both_directions) directions.push_back(opposite(in.reference_foot));

  std::vector<Hotspot> hotspots;
  for (Foot ref : directions) {
    const Foot mov = opposite(ref);
    const auto pair = align_pair(map, *feet.at(ref), in.landmarks.at(ref), map, *feet.at(mov), in.landmarks.at(mov));
    auto diff = diff_map(pair);
    for (auto& h : detect_hotspots(diff, in.config, in.sensor.pixel_area_cm2())) {
      h.reference_foot = ref;
      hotspots.push_back(neighborhood_validate(std::move(h), map, feet.at(ref)->mask, in.config));
    }
    prov.directions.push_back({ref, pair.transform, static_cast<int>(pair.overlap.cast<int>().sum())});
    result.diffs.emplace(ref, std::move(diff));
  }

  for (Foot f : {Foot::Left, Foot::Right})
    result.rois.emplace(f, define_rois(feet.at(f)->mask, in.landmarks.at(f), in.config));

  const Foot a = in.reference_foot, b = opposite(a);
  auto stats = roi_stats(map, result.rois.at(a), a, map, result.rois.at(b));
  result.report = assemble_report(in.subject, stats, std::move(hotspots), result.rois, in.config, std::move(prov));
  return result;
}

// ---------------------------------------------------------------------------

SessionDocument SessionDocument::load(const fs::path& path) {
  SessionDocument s;
  s.base_dir = path.parent_path();
  try {
    s.doc = json::parse(io::read_text(path));
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
  if (!s.doc.is_object()) throw Error(Errc::ParseError, path.string() + ": session must be a JSON object");
  if (!s.doc.contains("schema_version")) throw Error(Errc::MissingField, "missing field: schema_version");
  if (s.doc.at("schema_version") != kSessionSchemaVersion)
    throw Error(Errc::ParseError, "unsupported session schema_version");
  return s;
}

void SessionDocument::save(const fs::path& path) const { io::write_text(path, doc.dump(2) + "\n"); }

fs::path SessionDocument::resolve(const std::string& relative) const {
  const fs::path p(relative);
  return p.is_absolute() ? p : base_dir / p;
}

PipelineInputs SessionDocument::inputs(bool require_landmarks) const {
  auto require = [&](const char* key) -> const json& {
    if (!doc.contains(key) || doc.at(key).is_null()) throw Error(Errc::MissingField, std::string("missing field: ") + key);
    return doc.at(key);
  };
  // A string value names a JSON file holding the entry.
  auto inline_or_file = [&](const json& v) {
    return v.is_string() ? json::parse(io::read_text(resolve(v.get<std::string>()))) : v;
  };
  try {
    PipelineInputs in;
    in.plantar = io::read_raw_frame(resolve(require("plantar_frame").get<std::string>()), in.sensor);
    in.calibration = io::read_calibration(resolve(require("calibration").get<std::string>()));
    if (require_landmarks || doc.contains("landmarks"))
      in.landmarks = landmark_pairs_from_json(inline_or_file(require("landmarks")));
    if (doc.contains("segmentation")) {
      const auto& seg = doc.at("segmentation");
      if (seg.contains("rect") && !seg.at("rect").is_null()) in.init_rect = seg.at("rect").get<Rect>();
      if (seg.contains("scribbles"))
        in.scribbles = inline_or_file(seg.at("scribbles")).get<std::vector<Scribble>>();
      in.grabcut.iterations = seg.value("iterations", in.grabcut.iterations);
    }
    if (doc.contains("reference_foot")) in.reference_foot = parse_foot(doc.at("reference_foot").get<std::string>());
    in.both_directions = doc.value("both_directions", true);
    if (doc.contains("config")) apply_config_overrides(in.config, doc.at("config"));
    if (doc.contains("subject")) in.subject = doc.at("subject").get<std::map<std::string, std::string>>();
    return in;
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string("session document: ") + e.what());
  }
}

json write_analysis_outputs(const PipelineResult& result, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const json report = result.report;
  io::write_text(out_dir / "report.json", report.dump(2) + "\n");
  io::write_text(out_dir / "roi_stats.csv", roi_stats_csv(result.report.roi_stats));
  io::write_png(out_dir / "overlay.png", render_overlay(result.segmentation.map, result.report.hotspots));
  io::write_mask_png(out_dir / "mask.png", result.segmentation.grabcut.mask.mask);
  io::write_mask_rle(out_dir / "mask.rle", result.segmentation.grabcut.mask.mask);
  return report;
}

} // namespace thermofoot
