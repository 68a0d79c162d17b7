#include <doctest.h>

#include "cli_runner.hpp"
#include "thermofoot/io.hpp"
#include "thermofoot/phantom.hpp"
#include "thermofoot/pipeline.hpp"
#include "thermofoot/render.hpp"
#include "thermofoot/serialization.hpp"
#include "thermofoot/service.hpp"

#include <httplib.h>
#include <json.hpp>

#include <future>
#include <thread>
#include <unistd.h>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace thermofoot;

namespace {

struct Running {
  std::unique_ptr<service::HttpService> svc;
  std::thread thread;
  int port = 0;
  fs::path root;

  explicit Running(const std::string& name) {
    root = fs::temp_directory_path() / ("thermofoot_service_" + std::to_string(::getpid())) / name;
    fs::remove_all(root);
    service::HttpOptions o;
    o.root = root;
    o.port = 0;
    o.cors_origin = "http://ui.example";
    svc = std::make_unique<service::HttpService>(o);
    port = svc->bind();
    thread = std::thread([this] { svc->listen(); });
    svc->wait_until_ready();
  }
  ~Running() {
    svc->stop();
    thread.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(60, 0);
    return c;
  }
};

json body_of(const httplib::Result& r) { return json::parse(r->body); }

httplib::Result post_json(httplib::Client& c, const std::string& path, const json& body) {
  return c.Post(path, body.dump(), "application/json");
}

httplib::Result upload(httplib::Client& c, const std::string& id, const RawFrame& f,
                       const std::optional<CalibrationCurve>& cal) {
  std::vector<std::uint8_t> bytes;
  for (Eigen::Index i = 0; i < f.counts.size(); ++i) {
    bytes.push_back(static_cast<std::uint8_t>(f.counts.data()[i]));
    bytes.push_back(static_cast<std::uint8_t>(f.counts.data()[i] >> 8));
  }
  httplib::MultipartFormDataItems items{
      {"frame", std::string(bytes.begin(), bytes.end()), "frame.raw", "application/octet-stream"},
      {"sidecar", frame_sidecar(f).dump(), "frame.raw.json", "application/json"}};
  if (cal) items.push_back({"calibration", json(*cal).dump(), "calibration.json", "application/json"});
  return c.Post("/sessions/" + id + "/frames", items);
}

struct Flow {
  std::string id;
  json report;
};

/// Full happy path; every step must answer 200.
Flow happy_path(httplib::Client& c, const Phantom& ph, const CalibrationCurve& cal) {
  Flow f;
  auto r = post_json(c, "/sessions", {{"subject", {{"id", "case"}}}});
  REQUIRE(r);
  REQUIRE(r->status == 200);
  f.id = body_of(r).at("id");
  const std::string base = "/sessions/" + f.id;
  REQUIRE(upload(c, f.id, ph.plantar, cal)->status == 200);
  r = c.Get(base + "/render/plantar");
  REQUIRE(r->status == 200);
  CHECK(r->get_header_value("Content-Type") == "image/png");
  REQUIRE(post_json(c, base + "/scribbles", json::object())->status == 200);
  REQUIRE(post_json(c, base + "/landmarks", landmark_pairs_to_json(ph.truth.landmarks))->status == 200);
  r = c.Post(base + "/analyze");
  REQUIRE(r->status == 200);
  r = c.Get(base + "/report");
  REQUIRE(r->status == 200);
  f.report = body_of(r);
  return f;
}

PhantomSpec lesion_spec(double delta, Foot foot = Foot::Left) {
  PhantomSpec spec;
  spec.noise_sigma_c = 0.1;
  spec.lesions.push_back({foot, LesionShape::Disc, delta, -34.0, -10.0, 3.0});
  return spec;
}

} // namespace

TEST_CASE("happy path, overlay and audit") {
  Running srv("happy");
  auto c = srv.client();
  const auto spec = lesion_spec(3.0);
  const auto ph = generate(spec, 21);
  const auto flow = happy_path(c, ph, spec.calibration);
  const std::string base = "/sessions/" + flow.id;

  int confirmed = 0;
  BoundingBox box;
  for (const auto& h : flow.report.at("hotspots"))
    if (h.at("verdict") == "Confirmed") {
      ++confirmed;
      box = h.at("bbox").get<BoundingBox>();
    }
  CHECK(confirmed == 1);

  auto r = c.Get(base + "/render/plantar?overlay=hotspots");
  REQUIRE(r->status == 200);
  const auto img = io::decode_png({r->body.begin(), r->body.end()});
  CHECK(img.rows == 120);
  CHECK(img.cols == 160);
  CHECK(img.at(box.min_row, box.min_col) == kConfirmedColor);
  CHECK(img.at(box.max_row, box.max_col) == kConfirmedColor);

  CHECK(c.Get(base + "/render/plantar?overlay=bogus")->status == 422);
  CHECK(c.Get(base + "/render/periphery-90")->status == 404);
  CHECK(upload(c, flow.id, generate_periphery(spec, 90, 21), std::nullopt)->status == 200);
  CHECK(c.Get(base + "/render/periphery-90")->status == 200);

  const auto audit = body_of(c.Get(base + "/audit")).at("entries");
  std::vector<std::string> actions;
  for (const auto& e : audit) actions.push_back(e.at("action"));
  CHECK(actions == std::vector<std::string>{"create", "upload_frame", "segment", "landmarks", "analyze", "upload_frame"});
  CHECK(body_of(c.Get(base)).at("state") == "Analyzed");

  SUBCASE("CORS") {
    CHECK(r->get_header_value("Access-Control-Allow-Origin") == "http://ui.example");
    const auto pre = c.Options(base + "/landmarks");
    CHECK(pre->status == 204);
    CHECK(pre->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);
  }
}

TEST_CASE("out-of-order calls and invalid payloads") {
  Running srv("errors");
  auto c = srv.client();
  const PhantomSpec spec;
  const auto ph = generate(spec, 2);
  CHECK(c.Get("/sessions/0123456789abcdef")->status == 404);
  CHECK(c.Post("/sessions/../../etc/analyze")->status == 404);
  CHECK(c.Post("/sessions", "{not json", "application/json")->status == 422);
  CHECK(post_json(c, "/sessions", {{"config", {{"delta_threshold_c", -1}}}})->status == 422);

  const std::string id = body_of(post_json(c, "/sessions", json::object())).at("id");
  const std::string base = "/sessions/" + id;
  CHECK(post_json(c, base + "/scribbles", json::object())->status == 409);
  CHECK(c.Post(base + "/analyze")->status == 409);
  CHECK(c.Get(base + "/report")->status == 409);

  CHECK(upload(c, id, ph.plantar, std::nullopt)->status == 422);  // no calibration yet
  CHECK(c.Post(base + "/frames", "raw", "application/octet-stream")->status == 422);
  RawFrame small = ph.plantar;
  small.counts = small.counts.topRows(10).eval();
  CHECK(upload(c, id, small, spec.calibration)->status == 422);
  REQUIRE(upload(c, id, ph.plantar, spec.calibration)->status == 200);

  CHECK(post_json(c, base + "/landmarks", landmark_pairs_to_json(ph.truth.landmarks))->status == 409);
  CHECK(post_json(c, base + "/scribbles", {{"rect", {{"row", 0}, {"col", 0}, {"height", 500}, {"width", 10}}}})->status ==
        422);
  REQUIRE(post_json(c, base + "/scribbles", json::object())->status == 200);
  CHECK(c.Post(base + "/analyze")->status == 409);  // landmarks missing

  auto lm = landmark_pairs_to_json(ph.truth.landmarks);
  lm["left"] = json::array({{10, 10}, {20, 20}, {30, 30}, {40, 40}});
  const auto bad = post_json(c, base + "/landmarks", lm);
  CHECK(bad->status == 422);
  CHECK(body_of(bad).at("error") == "CollinearPoints");
  CHECK(post_json(c, base + "/landmarks", {{"left", landmarks_to_json(ph.truth.landmarks.at(Foot::Left))}})->status ==
        422);
  CHECK(c.Post(base + "/analyze")->status == 409);
}

TEST_CASE("resubmitting identical landmarks reproduces the report") {
  Running srv("idem");
  auto c = srv.client();
  const auto spec = lesion_spec(2.8, Foot::Right);
  const auto ph = generate(spec, 5);
  const auto flow = happy_path(c, ph, spec.calibration);
  const std::string base = "/sessions/" + flow.id;
  REQUIRE(post_json(c, base + "/landmarks", landmark_pairs_to_json(ph.truth.landmarks))->status == 200);
  CHECK(c.Get(base + "/report")->status == 409);  // re-landmarking resets the analysis
  const auto again = c.Post(base + "/analyze");
  REQUIRE(again->status == 200);
  CHECK(body_of(again) == flow.report);
  CHECK(c.Post(base + "/analyze")->body == again->body);
}

TEST_CASE("service and CLI agree on identical session inputs") {
  Running srv("parity");
  auto c = srv.client();
  const auto spec = lesion_spec(3.0);
  const auto ph = generate(spec, 13);
  const auto flow = happy_path(c, ph, spec.calibration);

  const fs::path session = srv.root / flow.id / "session.json";
  const fs::path out = srv.root / "cli_out";
  const auto r = run_cli("analyze " + session.string() + " --out-dir " + out.string());
  REQUIRE(r.exit_code == 0);
  std::string where;
  CHECK_MESSAGE(reports_agree(flow.report, json::parse(slurp(out / "report.json")), 1e-9, &where), where);

  // The same phantom written by the CLI itself.
  const fs::path p = srv.root / "cli_phantom";
  std::ofstream(srv.root / "spec.json") << json(spec).dump();
  REQUIRE(run_cli("--seed 13 --out-dir " + p.string() + " phantom --spec " + (srv.root / "spec.json").string())
              .exit_code == 0);
  REQUIRE(run_cli("analyze " + (p / "session.json").string() + " --out-dir " + (p / "out").string()).exit_code == 0);
  auto cli_report = json::parse(slurp(p / "out/report.json"));
  auto svc_report = flow.report;
  cli_report.erase("subject");
  svc_report.erase("subject");
  CHECK_MESSAGE(reports_agree(svc_report, cli_report, 1e-9, &where), where);
}

TEST_CASE("concurrent sessions do not interfere") {
  Running srv("concurrent");
  struct Case {
    PhantomSpec spec;
    std::uint64_t seed;
    json expected;
  };
  std::vector<Case> cases;
  for (int i = 0; i < 4; ++i) {
    Case k{lesion_spec(2.5 + 0.5 * i, i % 2 ? Foot::Right : Foot::Left), std::uint64_t(30 + i), {}};
    PipelineInputs in;
    const auto ph = generate(k.spec, k.seed);
    in.plantar = ph.plantar;
    in.calibration = k.spec.calibration;
    in.landmarks = ph.truth.landmarks;
    in.subject = {{"id", "case"}};
    k.expected = run_pipeline(in).report;
    cases.push_back(std::move(k));
  }

  std::vector<std::future<json>> futs;
  for (int round = 0; round < 2; ++round)
    for (const auto& k : cases)
      futs.push_back(std::async(std::launch::async, [&srv, &k] {
        auto c = srv.client();
        return happy_path(c, generate(k.spec, k.seed), k.spec.calibration).report;
      }));
  for (std::size_t i = 0; i < futs.size(); ++i) {
    const auto got = futs[i].get();
    std::string where;
    CHECK_MESSAGE(reports_agree(got, cases[i % cases.size()].expected, 1e-9, &where), where);
  }
}
