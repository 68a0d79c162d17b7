// Command-line front end for the plantar thermography pipeline.

#include "thermofoot/acquisition.hpp"
#include "thermofoot/error.hpp"
#include "thermofoot/io.hpp"
#include "thermofoot/phantom.hpp"
#include "thermofoot/pipeline.hpp"
#include "thermofoot/serialization.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace thermofoot;

namespace {

enum ExitCode : int { kOk = 0, kParse = 2, kPrecondition = 3, kPipeline = 4 };

int exit_code_for(Errc c) {
  switch (c) {
    case Errc::ParseError: return kParse;
    case Errc::MissingField:
    case Errc::InvalidArgument:
    case Errc::IoError:
    case Errc::InvalidRect:
    case Errc::InvalidLandmarks:
    case Errc::CoincidentPoints:
    case Errc::CollinearPoints:
    case Errc::InvalidAngle:
    case Errc::LesionOutsideFoot:
    case Errc::TooFewSamples:
    case Errc::DegenerateSamples:
    case Errc::EmptySamples:
    case Errc::DimensionMismatch: return kPrecondition;
    default: return kPipeline;
  }
}

void error_line(const std::string& code, const std::string& message, int exit_code) {
  std::cerr << json{{"error", code}, {"message", message}, {"exit_code", exit_code}}.dump() << std::endl;
}

struct Globals {
  std::string config_path;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  std::optional<double> threshold;
  std::string format;  // empty: the command's natural format
};

void apply_globals(PipelineInputs& in, const Globals& g) {
  if (!g.config_path.empty()) apply_config_overrides(in.config, io::read_json(g.config_path));
  if (g.threshold) in.config.delta_threshold_c = *g.threshold;
  in.config.validate();
}

void emit(const std::string& text) {
  std::cout << text;
  if (!text.empty() && text.back() != '\n') std::cout << '\n';
}

// Subcommands

int cmd_calibrate(const Globals& g, const std::string& samples_path) {
  const auto curve = fit_calibration(io::read_calibration_samples(samples_path));
  fs::create_directories(g.out_dir);
  const fs::path out = fs::path(g.out_dir) / "calibration.json";
  io::write_calibration(out, curve);
  if (g.format == "csv") {
    char row[256];
    std::snprintf(row, sizeof row, "%.12g,%.12g,%.6g,%.6g", curve.slope, curve.intercept, curve.residual_rms,
                  curve.nonlinearity_pct);
    emit("slope,intercept,residual_rms,nonlinearity_pct\n" + std::string(row));
  } else {
    emit(json(curve).dump(2));
  }
  return kOk;
}

int cmd_convert(const Globals& g, const std::string& frame_path, const std::string& calibration_path) {
  const auto frame = io::read_raw_frame(frame_path);
  const auto map = counts_to_temperature(frame, io::read_calibration(calibration_path));
  fs::create_directories(g.out_dir);
  const fs::path stem = fs::path(g.out_dir) / (frame.frame_id.empty() ? "temperature" : frame.frame_id);
  if (g.format == "csv") {
    io::write_temperature_csv(stem.string() + ".csv", map);
  } else {
    io::write_temperature_map(stem.string() + ".f32", map);
  }
  emit(json{{"frame_id", frame.frame_id}, {"valid_px", map.valid_mask().cast<int>().sum()}}.dump());
  return kOk;
}

int cmd_segment(const Globals& g, const std::string& session_path) {
  auto in = SessionDocument::load(session_path).inputs();
  const auto seg = segment_plantar(in.plantar, in.calibration, in.init_rect, in.scribbles, in.grabcut, in.sensor);
  const fs::path out(g.out_dir);
  fs::create_directories(out);
  io::write_mask_rle(out / "mask.rle", seg.grabcut.mask.mask);
  io::write_mask_png(out / "mask.png", seg.grabcut.mask.mask);
  const json summary{{"frame_id", in.plantar.frame_id},
                     {"init_rect", seg.init_rect},
                     {"energies", seg.grabcut.energies},
                     {"foreground_px", seg.grabcut.mask.area()},
                     {"left_px", seg.feet.left.area()},
                     {"right_px", seg.feet.right.area()}};
  io::write_text(out / "segmentation.json", summary.dump(2) + "\n");
  emit(summary.dump(2));
  return kOk;
}

int cmd_align(const Globals& g, const std::string& session_path) {
  auto in = SessionDocument::load(session_path).inputs();
  const auto seg = segment_plantar(in.plantar, in.calibration, in.init_rect, in.scribbles, in.grabcut, in.sensor);
  const std::map<Foot, const FootMask*> feet{{Foot::Left, &seg.feet.left}, {Foot::Right, &seg.feet.right}};
  const fs::path out(g.out_dir);
  fs::create_directories(out);
  json dirs = json::array();
  for (Foot ref : {Foot::Left, Foot::Right}) {
    const Foot mov = opposite(ref);
    const auto pair = align_pair(seg.map, *feet.at(ref), in.landmarks.at(ref), seg.map, *feet.at(mov),
                                 in.landmarks.at(mov));
    const auto diff = diff_map(pair);
    TemperatureMap dm{diff.diff, seg.map.view, seg.map.source_frame};
    io::write_temperature_map(out / ("diff_" + to_string(ref) + ".f32"), dm);
    dirs.push_back({{"reference_foot", to_string(ref)},
                    {"transform", pair.transform},
                    {"determinant", pair.transform.determinant()},
                    {"overlap_px", pair.overlap.cast<int>().sum()}});
  }
  const json doc{{"frame_id", in.plantar.frame_id}, {"directions", dirs}};
  io::write_text(out / "alignment.json", doc.dump(2) + "\n");
  emit(doc.dump(2));
  return kOk;
}

int cmd_analyze(const Globals& g, const std::string& session_path) {
  auto in = SessionDocument::load(session_path).inputs();
  apply_globals(in, g);
  const auto result = run_pipeline(in);
  const json report = write_analysis_outputs(result, g.out_dir);
  emit(g.format == "csv" ? roi_stats_csv(result.report.roi_stats) : report.dump(2));
  return kOk;
}

PhantomSpec load_spec(const std::string& path) {
  if (path.empty()) return {};
  return io::read_json(path).get<PhantomSpec>();
}

int cmd_phantom(const Globals& g, const std::string& spec_path, bool with_periphery) {
  const PhantomSpec spec = load_spec(spec_path);
  const auto ph = generate(spec, g.seed);
  const fs::path out(g.out_dir);
  fs::create_directories(out);
  io::write_raw_frame(out / "plantar.raw", ph.plantar);
  io::write_calibration(out / "calibration.json", spec.calibration);
  io::write_text(out / "truth.json", ground_truth_to_json(ph.truth).dump(2) + "\n");
  io::write_mask_rle(out / "truth_mask.rle", ph.truth.combined);

  json frames = json::array({"plantar.raw"});
  if (with_periphery)
    for (int angle : {0, 90, 180, 270}) {
      const auto f = generate_periphery(spec, angle, g.seed);
      const std::string name = "periphery_" + std::to_string(angle) + ".raw";
      io::write_raw_frame(out / name, f);
      frames.push_back(name);
    }

  SessionDocument session;
  session.doc = {{"schema_version", kSessionSchemaVersion},
                 {"plantar_frame", "plantar.raw"},
                 {"calibration", "calibration.json"},
                 {"landmarks", landmark_pairs_to_json(ph.truth.landmarks)},
                 {"reference_foot", "left"},
                 {"both_directions", true},
                 {"subject", {{"id", phantom_frame_prefix(spec, g.seed)}}}};
  session.save(out / "session.json");
  emit(json{{"frame_id", ph.plantar.frame_id}, {"frames", frames}, {"session", "session.json"},
            {"anomalies", ph.truth.anomalies.size()}}
           .dump(2));
  return kOk;
}

int cmd_capture(const Globals& g, std::optional<int> listen_port, const std::string& connect, int count,
                const std::string& spec_path, const std::string& address) {
  if (listen_port) {
    const PhantomSpec spec = load_spec(spec_path);
    const std::uint64_t seed = g.seed;
    CaptureServer server([spec, seed] { return phantom_source(spec, seed); },
                         static_cast<std::uint16_t>(*listen_port), address);
    emit(json{{"listening", server.port()}}.dump());
    std::cout.flush();
    server.serve(count);
    return kOk;
  }
  const auto colon = connect.rfind(':');
  if (colon == std::string::npos) throw Error(Errc::InvalidArgument, "--connect expects HOST:PORT");
  const std::string host = connect.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(connect.substr(colon + 1));
  } catch (const std::exception&) {
    throw Error(Errc::InvalidArgument, "--connect expects HOST:PORT");
  }
  const auto rx = fetch_sequence(host, static_cast<std::uint16_t>(port));
  const fs::path out(g.out_dir);
  fs::create_directories(out);
  json frames = json::array();
  for (const auto& f : rx.frames) {
    const std::string name = (f.frame_id.empty() ? f.view.label() : f.frame_id) + ".raw";
    io::write_raw_frame(out / name, f);
    frames.push_back({{"file", name}, {"view", f.view}});
  }
  json summary{{"complete", rx.complete}, {"frames", frames}, {"dropped", rx.dropped}};
  if (rx.error) summary["error"] = json::parse(*rx.error, nullptr, false);
  emit(summary.dump(2));
  if (rx.error) {
    const auto e = summary["error"];
    const std::string code = e.is_object() ? e.value("error", "SourceExhausted") : "SourceExhausted";
    error_line(code, e.is_object() ? e.value("detail", "") : *rx.error, kPipeline);
    return kPipeline;
  }
  if (!rx.complete) {
    error_line("IoError", "connection closed before the sequence completed", kPipeline);
    return kPipeline;
  }
  return kOk;
}

int cmd_report_csv(const Globals& g, const std::string& report_path) {
  const auto report = io::read_json(report_path).get<AnalysisReport>();
  const std::string csv = roi_stats_csv(report.roi_stats);
  if (g.out_dir != ".") io::write_text(fs::path(g.out_dir) / "roi_stats.csv", csv);
  emit(g.format == "json" ? json(report.roi_stats).dump(2) : csv);
  return kOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Plantar foot thermography analysis"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config_path, "JSON file with analysis config overrides")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Random seed for phantom generation");
  app.add_option("--out-dir", g.out_dir, "Directory for output files");
  app.add_option("--threshold", g.threshold, "Override delta_threshold_c (degC)");
  app.add_option("--format", g.format, "Primary stdout format")->check(CLI::IsMember({"json", "csv"}));

  std::string path_a, path_b, spec_path, connect, address = "127.0.0.1";
  bool periphery = false;
  std::optional<int> listen_port;
  int count = 1;

  auto* calibrate = app.add_subcommand("calibrate", "Fit a calibration line from bath samples");
  calibrate->add_option("samples", path_a, "CSV: reference_temp_c,mean_counts")->required();

  auto* convert = app.add_subcommand("convert", "Convert a raw frame to temperatures");
  convert->add_option("frame", path_a, "Raw frame (.raw with .json sidecar)")->required();
  convert->add_option("--calibration", path_b, "Calibration JSON")->required();

  auto* segment = app.add_subcommand("segment", "Segment the feet of a session's plantar frame");
  segment->add_option("session", path_a, "Session document")->required();

  auto* align = app.add_subcommand("align", "Align the two feet of a session in both directions");
  align->add_option("session", path_a, "Session document")->required();

  auto* analyze = app.add_subcommand("analyze", "Run the full analysis of a session");
  analyze->add_option("session", path_a, "Session document")->required();

  auto* phantom = app.add_subcommand("phantom", "Generate a synthetic session with ground truth");
  phantom->add_option("--spec", spec_path, "Phantom spec JSON")->check(CLI::ExistingFile);
  phantom->add_flag("--periphery", periphery, "Also write the four periphery frames");

  auto* capture = app.add_subcommand("capture", "Stream or receive a simulated capture sequence");
  auto* listen_opt = capture->add_option("--listen", listen_port, "Serve phantom sequences on this port");
  auto* connect_opt = capture->add_option("--connect", connect, "Receive one sequence from HOST:PORT");
  listen_opt->excludes(connect_opt);
  capture->add_option("--count", count, "Connections to serve before exiting")->check(CLI::PositiveNumber);
  capture->add_option("--spec", spec_path, "Phantom spec JSON for --listen")->check(CLI::ExistingFile);
  capture->add_option("--address", address, "Listen address");

  auto* report_csv = app.add_subcommand("report-csv", "Print the ROI table of a report as CSV");
  report_csv->add_option("report", path_a, "report.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    error_line("UsageError", e.what(), kParse);
    return kParse;
  }

  try {
    if (*calibrate) return cmd_calibrate(g, path_a);
    if (*convert) return cmd_convert(g, path_a, path_b);
    if (*segment) return cmd_segment(g, path_a);
    if (*align) return cmd_align(g, path_a);
    if (*analyze) return cmd_analyze(g, path_a);
    if (*phantom) return cmd_phantom(g, spec_path, periphery);
    if (*capture) {
      if (!listen_port && connect.empty()) throw Error(Errc::InvalidArgument, "capture needs --listen or --connect");
      return cmd_capture(g, listen_port, connect, count, spec_path, address);
    }
    if (*report_csv) return cmd_report_csv(g, path_a);
  } catch (const Error& e) {
    const int code = exit_code_for(e.code());
    error_line(std::string(to_string(e.code())), e.what(), code);
    return code;
  } catch (const nlohmann::json::exception& e) {
    error_line("ParseError", e.what(), kParse);
    return kParse;
  } catch (const std::exception& e) {
    error_line("InternalError", e.what(), kPipeline);
    return kPipeline;
  }
  return kOk;
}
