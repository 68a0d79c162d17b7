#include "thermofoot/service.hpp"

#include "thermofoot/error.hpp"
#include "thermofoot/io.hpp"
#include "thermofoot/pipeline.hpp"
#include "thermofoot/render.hpp"
#include "thermofoot/serialization.hpp"

#include <httplib.h>

#include <chrono>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>

namespace thermofoot::service {

using nlohmann::json;

namespace {

const char* const kSessionFile = "session.json";
const char* const kAuditFile = "audit.jsonl";
const char* const kAnalysisDir = "analysis";

/// Raised inside handlers to short-circuit with a specific HTTP status.
struct HttpError {
  int status;
  std::string code;
  std::string message;
};

[[noreturn]] void conflict(const std::string& message) { throw HttpError{409, "Conflict", message}; }

int status_for(Errc code) { return code == Errc::IoError ? 500 : 422; }

bool valid_id(const std::string& id) { return std::regex_match(id, std::regex("[0-9a-f]{16}")); }

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string("request body: ") + e.what());
  }
}

SessionState state_of(const SessionDocument& s) {
  return parse_session_state(s.doc.at("service").at("state").get<std::string>());
}

void set_state(SessionDocument& s, SessionState st) { s.doc["service"]["state"] = to_string(st); }

bool landmarks_submitted(const SessionDocument& s) { return s.doc.at("service").value("landmarks_submitted", false); }

std::string frame_file(const View& v) {
  return v.kind == ViewKind::Plantar ? "plantar.raw" : "periphery_" + std::to_string(v.angle_deg) + ".raw";
}

void clear_analysis(const fs::path& dir) {
  std::error_code ec;
  fs::remove_all(dir / kAnalysisDir, ec);
}

} // namespace

std::string to_string(SessionState s) {
  switch (s) {
    case SessionState::AwaitingFrames: return "AwaitingFrames";
    case SessionState::AwaitingSegmentation: return "AwaitingSegmentation";
    case SessionState::AwaitingLandmarks: return "AwaitingLandmarks";
    case SessionState::Analyzed: return "Analyzed";
  }
  return "?";
}

SessionState parse_session_state(const std::string& s) {
  for (auto st : {SessionState::AwaitingFrames, SessionState::AwaitingSegmentation, SessionState::AwaitingLandmarks,
                  SessionState::Analyzed})
    if (to_string(st) == s) return st;
  throw Error(Errc::ParseError, "unknown session state: " + s);
}

Reply Reply::json(int status, const nlohmann::json& body) { return {status, "application/json", body.dump(2)}; }

Reply Reply::error(int status, const std::string& code, const std::string& message) {
  return json(status, {{"error", code}, {"message", message}});
}

// ---------------------------------------------------------------------------

SessionStore::SessionStore(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

std::shared_ptr<std::mutex> SessionStore::lock_for(const std::string& id) {
  std::lock_guard lock(registry_mutex_);
  auto& m = locks_[id];
  if (!m) m = std::make_shared<std::mutex>();
  return m;
}

namespace {

struct Session {
  std::string id;
  fs::path dir;
  SessionDocument doc;

  void save() const { doc.save(dir / kSessionFile); }

  void audit(const std::string& action, const json& detail = json::object()) const {
    std::size_t seq = 1;
    {
      std::ifstream in(dir / kAuditFile);
      std::string line;
      while (std::getline(in, line)) ++seq;
    }
    const auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
    std::ofstream out(dir / kAuditFile, std::ios::app);
    out << json{{"seq", seq}, {"action", action}, {"at_ms", now}, {"detail", detail}}.dump() << "\n";
  }
};

/// Runs `fn` on the loaded session under its lock, mapping failures to HTTP replies.
template <typename Fn>
Reply with_session(const fs::path& root, const std::string& id, std::mutex* lock, Fn&& fn) {
  try {
    if (!valid_id(id) || !fs::exists(root / id / kSessionFile))
      return Reply::error(404, "NotFound", "unknown session: " + id);
    std::lock_guard guard(*lock);
    Session s{id, root / id, SessionDocument::load(root / id / kSessionFile)};
    return fn(s);
  } catch (const HttpError& e) {
    return Reply::error(e.status, e.code, e.message);
  } catch (const Error& e) {
    return Reply::error(status_for(e.code()), std::string(to_string(e.code())), e.what());
  } catch (const json::exception& e) {
    return Reply::error(422, "ParseError", e.what());
  }
}

} // namespace

Reply SessionStore::create(const std::string& body) {
  try {
    const json req = parse_body(body);
    if (!req.is_object()) throw Error(Errc::ParseError, "request body must be a JSON object");
    SessionDocument doc;
    doc.doc = {{"schema_version", kSessionSchemaVersion},
               {"reference_foot", "left"},
               {"both_directions", true},
               {"service", {{"state", to_string(SessionState::AwaitingFrames)}, {"landmarks_submitted", false}}}};
    if (req.contains("reference_foot"))
      doc.doc["reference_foot"] = to_string(parse_foot(req.at("reference_foot").get<std::string>()));
    if (req.contains("both_directions")) doc.doc["both_directions"] = req.at("both_directions").get<bool>();
    if (req.contains("subject"))
      doc.doc["subject"] = req.at("subject").get<std::map<std::string, std::string>>();
    if (req.contains("config")) {
      AnalysisConfig cfg;
      apply_config_overrides(cfg, req.at("config"));
      cfg.validate();
      doc.doc["config"] = req.at("config");
    }

    std::string id;
    {
      std::lock_guard lock(registry_mutex_);
      static std::mt19937_64 rng{std::random_device{}()};
      do {
        std::ostringstream ss;
        ss << std::hex;
        ss.width(16);
        ss.fill('0');
        ss << rng();
        id = ss.str();
      } while (fs::exists(root_ / id));
      fs::create_directories(root_ / id);
    }
    Session s{id, root_ / id, doc};
    s.doc.base_dir = s.dir;
    s.save();
    s.audit("create", req);
    return Reply::json(200, {{"id", id}, {"state", to_string(SessionState::AwaitingFrames)}});
  } catch (const Error& e) {
    return Reply::error(status_for(e.code()), std::string(to_string(e.code())), e.what());
  } catch (const json::exception& e) {
    return Reply::error(422, "ParseError", e.what());
  }
}

Reply SessionStore::status(const std::string& id) {
  return with_session(root_, id, lock_for(id).get(), [&](Session& s) {
    std::size_t entries = 0;
    std::ifstream in(s.dir / kAuditFile);
    for (std::string line; std::getline(in, line);) ++entries;
    return Reply::json(200, {{"id", id},
                             {"state", s.doc.doc.at("service").at("state")},
                             {"landmarks_submitted", landmarks_submitted(s.doc)},
                             {"frames", s.doc.doc.value("frames", json::object())},
                             {"audit_entries", entries}});
  });
}

Reply SessionStore::upload_frame(const std::string& id, const FrameUpload& up) {
  return with_session(root_, id, lock_for(id).get(), [&](Session& s) {
    const RawFrame meta = frame_from_sidecar(parse_body(up.sidecar));
    const bool plantar = meta.view.kind == ViewKind::Plantar;

    std::optional<CalibrationCurve> cal;
    if (up.calibration) {
      cal = parse_body(*up.calibration).get<CalibrationCurve>();
      if (!cal->valid()) throw Error(Errc::InvalidArgument, "calibration slope must be finite and nonzero");
    }
    if (plantar && !cal && !s.doc.doc.contains("calibration"))
      throw Error(Errc::MissingField, "missing field: calibration");

    // Stage and read back through the regular loader before accepting.
    const fs::path staged = s.dir / ".upload.raw";
    io::write_bytes(staged, std::vector<std::uint8_t>(up.frame.begin(), up.frame.end()));
    io::write_text(io::sidecar_path(staged), up.sidecar);
    RawFrame frame;
    try {
      frame = io::read_raw_frame(staged);
    } catch (...) {
      fs::remove(staged);
      fs::remove(io::sidecar_path(staged));
      throw;
    }
    const std::string name = frame_file(frame.view);
    fs::rename(staged, s.dir / name);
    fs::rename(io::sidecar_path(staged), io::sidecar_path(s.dir / name));
    if (cal) {
      io::write_calibration(s.dir / "calibration.json", *cal);
      s.doc.doc["calibration"] = "calibration.json";
    }
    s.doc.doc["frames"][frame.view.label()] = name;

    if (plantar) {
      // A new plantar frame invalidates everything derived from the old one.
      s.doc.doc["plantar_frame"] = name;
      s.doc.doc.erase("segmentation");
      s.doc.doc.erase("landmarks");
      s.doc.doc["service"]["landmarks_submitted"] = false;
      clear_analysis(s.dir);
      set_state(s.doc, SessionState::AwaitingSegmentation);
    }
    s.save();
    s.audit("upload_frame", {{"view", frame.view.label()}, {"frame_id", frame.frame_id}, {"calibration", cal.has_value()}});
    return Reply::json(200, {{"state", s.doc.doc["service"]["state"]},
                             {"view", frame.view.label()},
                             {"frame_id", frame.frame_id}});
  });
}

Reply SessionStore::render(const std::string& id, const std::string& view, bool overlay_hotspots) {
  return with_session(root_, id, lock_for(id).get(), [&](Session& s) {
    const json frames = s.doc.doc.value("frames", json::object());
    if (!frames.contains(view)) return Reply::error(404, "NotFound", "no frame uploaded for view " + view);
    if (!s.doc.doc.contains("calibration")) conflict("a calibration is needed before rendering");
    const auto frame = io::read_raw_frame(s.doc.resolve(frames.at(view).get<std::string>()));
    const auto map = counts_to_temperature(frame, io::read_calibration(s.doc.resolve("calibration.json")));
    RgbImage img;
    if (overlay_hotspots) {
      if (view != "plantar") throw Error(Errc::InvalidArgument, "hotspot overlay is only defined for the plantar view");
      if (state_of(s.doc) != SessionState::Analyzed) conflict("hotspot overlay requires an analyzed session");
      const auto report = io::read_json(s.dir / kAnalysisDir / "report.json").get<AnalysisReport>();
      img = render_overlay(map, report.hotspots);
    } else {
      img = render_pseudocolor(map);
    }
    const auto png = io::encode_png(img);
    return Reply{200, "image/png", std::string(png.begin(), png.end())};
  });
}

Reply SessionStore::scribbles(const std::string& id, const std::string& body) {
  return with_session(root_, id, lock_for(id).get(), [&](Session& s) {
    if (state_of(s.doc) == SessionState::AwaitingFrames) conflict("upload a plantar frame before segmenting");
    const json req = parse_body(body);
    json seg = json::object();
    std::optional<Rect> rect;
    if (req.contains("rect") && !req.at("rect").is_null()) {
      rect = req.at("rect").get<Rect>();
      seg["rect"] = *rect;
    }
    const auto strokes = req.value("scribbles", json::array()).get<std::vector<Scribble>>();
    seg["scribbles"] = strokes;
    GrabCutParams params;
    params.iterations = req.value("iterations", params.iterations);
    seg["iterations"] = params.iterations;

    const auto in = s.doc.inputs(false);
    const auto out = segment_plantar(in.plantar, in.calibration, rect, strokes, params, in.sensor);
    io::write_mask_rle(s.dir / "mask.rle", out.grabcut.mask.mask);

    s.doc.doc["segmentation"] = seg;
    s.doc.doc.erase("landmarks");
    s.doc.doc["service"]["landmarks_submitted"] = false;
    clear_analysis(s.dir);
    set_state(s.doc, SessionState::AwaitingLandmarks);
    s.save();
    s.audit("segment", seg);
    return Reply::json(200, {{"state", to_string(SessionState::AwaitingLandmarks)},
                             {"foreground_px", out.grabcut.mask.area()},
                             {"left_px", out.feet.left.area()},
                             {"right_px", out.feet.right.area()},
                             {"energies", out.grabcut.energies}});
  });
}

Reply SessionStore::landmarks(const std::string& id, const std::string& body) {
  return with_session(root_, id, lock_for(id).get(), [&](Session& s) {
    const auto st = state_of(s.doc);
    if (st != SessionState::AwaitingLandmarks && st != SessionState::Analyzed)
      conflict("segment the plantar frame before submitting landmarks");
    const auto pairs = landmark_pairs_from_json(parse_body(body));
    const auto frame = io::read_raw_frame(s.doc.resolve(s.doc.doc.at("plantar_frame").get<std::string>()));
    for (const auto& [foot, lm] : pairs) lm.validate(static_cast<int>(frame.counts.rows()), static_cast<int>(frame.counts.cols()));

    s.doc.doc["landmarks"] = landmark_pairs_to_json(pairs);
    s.doc.doc["service"]["landmarks_submitted"] = true;
    clear_analysis(s.dir);
    set_state(s.doc, SessionState::AwaitingLandmarks);
    s.save();
    s.audit("landmarks", s.doc.doc["landmarks"]);
    return Reply::json(200, {{"state", to_string(SessionState::AwaitingLandmarks)}, {"landmarks_submitted", true}});
  });
}

Reply SessionStore::analyze(const std::string& id) {
  return with_session(root_, id, lock_for(id).get(), [&](Session& s) {
    const auto st = state_of(s.doc);
    if (st == SessionState::AwaitingFrames || st == SessionState::AwaitingSegmentation)
      conflict("segment the plantar frame before analysis");
    if (!landmarks_submitted(s.doc)) conflict("submit landmarks for both feet before analysis");
    const auto result = run_pipeline(s.doc.inputs());
    const json report = write_analysis_outputs(result, s.dir / kAnalysisDir);
    set_state(s.doc, SessionState::Analyzed);
    s.save();
    s.audit("analyze", {{"hotspots", report.at("hotspots").size()}, {"confirmed", result.report.confirmed_count()}});
    return Reply::json(200, report);
  });
}

Reply SessionStore::report(const std::string& id) {
  return with_session(root_, id, lock_for(id).get(), [&](Session& s) {
    if (state_of(s.doc) != SessionState::Analyzed) conflict("session has not been analyzed");
    return Reply{200, "application/json", io::read_text(s.dir / kAnalysisDir / "report.json")};
  });
}

Reply SessionStore::audit(const std::string& id) {
  return with_session(root_, id, lock_for(id).get(), [&](Session& s) {
    json entries = json::array();
    std::ifstream in(s.dir / kAuditFile);
    for (std::string line; std::getline(in, line);)
      if (!line.empty()) entries.push_back(json::parse(line));
    return Reply::json(200, {{"entries", entries}});
  });
}

// ---------------------------------------------------------------------------

struct HttpService::Impl {
  HttpOptions options;
  SessionStore store;
  httplib::Server server;

  explicit Impl(HttpOptions o) : options(std::move(o)), store(options.root) {}
};

namespace {

void send(httplib::Response& res, const Reply& r) {
  res.status = r.status;
  res.set_content(r.body, r.content_type);
}

} // namespace

HttpService::HttpService(HttpOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {
  auto& srv = impl_->server;
  SessionStore& store = impl_->store;
  const std::string origin = impl_->options.cors_origin;

  srv.set_post_routing_handler([origin](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", origin);
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  });
  srv.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  srv.Post("/sessions", [&store](const httplib::Request& req, httplib::Response& res) { send(res, store.create(req.body)); });
  srv.Get(R"(/sessions/([^/]+))", [&store](const httplib::Request& req, httplib::Response& res) {
    send(res, store.status(req.matches[1]));
  });
  srv.Post(R"(/sessions/([^/]+)/frames)", [&store](const httplib::Request& req, httplib::Response& res) {
    if (!req.is_multipart_form_data() || !req.has_file("frame") || !req.has_file("sidecar")) {
      send(res, Reply::error(422, "MissingField", "multipart fields 'frame' and 'sidecar' are required"));
      return;
    }
    FrameUpload up;
    up.frame = req.get_file_value("frame").content;
    up.sidecar = req.get_file_value("sidecar").content;
    if (req.has_file("calibration")) up.calibration = req.get_file_value("calibration").content;
    send(res, store.upload_frame(req.matches[1], up));
  });
  srv.Get(R"(/sessions/([^/]+)/render/([^/]+))", [&store](const httplib::Request& req, httplib::Response& res) {
    const std::string overlay = req.has_param("overlay") ? req.get_param_value("overlay") : "";
    if (!overlay.empty() && overlay != "hotspots") {
      send(res, Reply::error(422, "InvalidArgument", "overlay must be 'hotspots'"));
      return;
    }
    send(res, store.render(req.matches[1], req.matches[2], overlay == "hotspots"));
  });
  srv.Post(R"(/sessions/([^/]+)/scribbles)", [&store](const httplib::Request& req, httplib::Response& res) {
    send(res, store.scribbles(req.matches[1], req.body));
  });
  srv.Post(R"(/sessions/([^/]+)/landmarks)", [&store](const httplib::Request& req, httplib::Response& res) {
    send(res, store.landmarks(req.matches[1], req.body));
  });
  srv.Post(R"(/sessions/([^/]+)/analyze)", [&store](const httplib::Request& req, httplib::Response& res) {
    send(res, store.analyze(req.matches[1]));
  });
  srv.Get(R"(/sessions/([^/]+)/report)", [&store](const httplib::Request& req, httplib::Response& res) {
    send(res, store.report(req.matches[1]));
  });
  srv.Get(R"(/sessions/([^/]+)/audit)", [&store](const httplib::Request& req, httplib::Response& res) {
    send(res, store.audit(req.matches[1]));
  });
  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    send(res, Reply::error(500, "InternalError", what));
  });
}

HttpService::~HttpService() { stop(); }

int HttpService::bind() {
  auto& o = impl_->options;
  if (o.port == 0) {
    o.port = impl_->server.bind_to_any_port(o.host);
  } else if (!impl_->server.bind_to_port(o.host, o.port)) {
    o.port = -1;
  }
  if (o.port < 0) throw Error(Errc::IoError, "cannot bind " + o.host);
  return o.port;
}

bool HttpService::listen() { return impl_->server.listen_after_bind(); }

void HttpService::stop() {
  if (impl_) impl_->server.stop();
}

void HttpService::wait_until_ready() const { impl_->server.wait_until_ready(); }

} // namespace thermofoot::service
