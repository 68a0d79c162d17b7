// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero if any fails.

#include "cli_runner.hpp"
#include "cut_oracle.hpp"
#include "oracles.hpp"
#include "thermofoot/acquisition.hpp"
#include "thermofoot/analysis.hpp"
#include "thermofoot/io.hpp"
#include "thermofoot/maxflow.hpp"
#include "thermofoot/phantom.hpp"
#include "thermofoot/pipeline.hpp"
#include "thermofoot/serialization.hpp"
#include "thermofoot/service.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <thread>
#include <unistd.h>

using namespace thermofoot;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kFitTol = 1e-9;
constexpr double kZeroNonlinearityPct = 1e-9;
constexpr double kNonlinearityRelTol = 1e-12;
constexpr double kRuntimeCalibrationS = 1.0;

constexpr int kCutGraphs = 200;
constexpr double kCutRelTol = 1e-9;
constexpr double kRuntimeCutS = 10.0;

constexpr int kCorpusSize = 20;
constexpr double kIouNoiseless = 0.95;
constexpr double kIouNoisy = 0.90;
constexpr double kNoisySigma = 0.3;
constexpr double kRuntimeSegmentationS = 30.0;

constexpr double kAffineTol = 1e-6;
constexpr double kWarpRoundTripC = 0.1;

constexpr double kSuiteNoiseSigma = 0.1;
constexpr double kRuntimeDetectionS = 20.0;

constexpr double kRoiMeanTol = 1e-9;
constexpr double kTableDiffTol = 1e-5;  // float32 temperature storage
constexpr int kPartitionMasks = 50;

constexpr double kRuntimeAcquisitionS = 5.0;

constexpr double kParityTol = 1e-9;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

using Clock = std::chrono::steady_clock;

bool report_line(int id, const std::string& name, const std::function<void(Outcome&)>& body, double budget_s) {
  Outcome o;
  const auto t0 = Clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << " [exception: " << e.what() << "]";
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (budget_s > 0 && secs >= budget_s) {
    o.pass = false;
    o.detail << " [over runtime budget " << budget_s << " s]";
  }
  std::printf("criterion %d %s: %s |%s | %.2f s\n", id, name.c_str(), o.pass ? "PASS" : "FAIL", o.detail.str().c_str(),
              secs);
  std::fflush(stdout);
  return o.pass;
}

// 1 ---------------------------------------------------------------------------

void calibration(Outcome& o) {
  const double slope = 0.0125, intercept = -42.0;
  const auto clean = oracle::bath_protocol(slope, intercept, 0.0);
  const auto fit = fit_calibration(clean);
  const double ds = std::abs(fit.slope - slope), di = std::abs(fit.intercept - intercept);
  o.require(clean.size() == 41, "41 samples");
  o.require(ds <= kFitTol && di <= kFitTol, "slope/intercept recovery");
  o.require(fit.nonlinearity_pct <= kZeroNonlinearityPct, "zero non-linearity");

  const auto bumped = oracle::bath_protocol(slope, intercept, 0.6);
  const auto bfit = fit_calibration(bumped);
  const auto [os, oi] = oracle::linreg(bumped);
  const double expected = oracle::brute_nonlinearity(bumped, os, oi);
  const double rel = std::abs(bfit.nonlinearity_pct - expected) / expected;
  o.require(rel <= kNonlinearityRelTol, "bump non-linearity vs oracle");
  o.detail << " slope_err=" << ds << " intercept_err=" << di << " nl_clean=" << fit.nonlinearity_pct
           << "% nl_bump=" << bfit.nonlinearity_pct << "% rel_err=" << rel;
}

// 2 ---------------------------------------------------------------------------

void min_cut(Outcome& o) {
  std::mt19937_64 rng(20240601);
  int agree = 0, partitions_ok = 0;
  for (int i = 0; i < kCutGraphs; ++i) {
    const auto g = oracle::random_graph(rng);
    FlowGraph f(g.n);
    for (int v = 0; v < g.n; ++v) f.add_terminal_weights(v, g.source_cap[v], g.sink_cap[v]);
    for (const auto& e : g.edges) f.add_edge(e.from, e.to, e.cap);
    const double flow = f.max_flow();
    const double truth = oracle::brute_force_min_cut(g);
    const double scale = std::max(1.0, truth);
    agree += std::abs(flow - truth) <= kCutRelTol * scale;

    double cut = 0;  // capacity of the partition the solver reports
    for (int v = 0; v < g.n; ++v) cut += f.in_source_segment(v) ? g.sink_cap[v] : g.source_cap[v];
    for (const auto& e : g.edges)
      if (f.in_source_segment(e.from) && !f.in_source_segment(e.to)) cut += e.cap;
    partitions_ok += std::abs(cut - truth) <= kCutRelTol * scale;
  }
  o.require(agree == kCutGraphs, "flow value agreement");
  o.require(partitions_ok == kCutGraphs, "reported partition is a minimum cut");
  o.detail << " graphs=" << kCutGraphs << " agreement=" << 100.0 * agree / kCutGraphs
           << "% partitions=" << 100.0 * partitions_ok / kCutGraphs << "%";
}

// 3 ---------------------------------------------------------------------------

void segmentation(Outcome& o) {
  double worst_clean = 1.0, worst_noisy = 1.0;
  int monotone = 0, runs = 0;
  for (int i = 0; i < kCorpusSize; ++i)
    for (double sigma : {0.0, kNoisySigma}) {
      const auto spec = oracle::corpus_spec(i, sigma);
      const auto ph = generate(spec, 500 + i);
      const auto seg = segment_plantar(ph.plantar, spec.calibration, std::nullopt, {}, GrabCutParams{});
      const double v = oracle::iou(seg.grabcut.mask.mask, ph.truth.combined);
      (sigma == 0.0 ? worst_clean : worst_noisy) = std::min(sigma == 0.0 ? worst_clean : worst_noisy, v);
      monotone += oracle::non_increasing(seg.grabcut.energies);
      ++runs;
    }
  o.require(worst_clean >= kIouNoiseless, "noiseless IoU");
  o.require(worst_noisy >= kIouNoisy, "noisy IoU");
  o.require(monotone == runs, "energy non-increasing");
  o.detail << " phantoms=" << kCorpusSize << " min_iou(sigma=0)=" << worst_clean << " min_iou(sigma=0.3)="
           << worst_noisy << " monotone_runs=" << monotone << "/" << runs;
}

// 4 ---------------------------------------------------------------------------

void registration(Outcome& o) {
  std::mt19937_64 rng(77);
  const std::array<Point<>, 3> src{Point<>(12, 15), Point<>(18, 140), Point<>(100, 70)};
  double worst_affine = 0;
  for (int i = 0; i < 100; ++i) {
    const auto truth = oracle::random_affine(rng);
    std::array<Point<>, 3> dst;
    for (int k = 0; k < 3; ++k) dst[k] = truth(src[k]);
    worst_affine = std::max(worst_affine, (affine_from_three(src, dst).matrix - truth.matrix).cwiseAbs().maxCoeff());
  }
  o.require(worst_affine <= kAffineTol, "affine recovery");

  const auto map = oracle::smooth_map(120, 160);
  std::uniform_real_distribution<double> ang(-0.3, 0.3), sc(0.9, 1.1), tr(-6, 6);
  double worst_warp = 0;
  for (int i = 0; i < 20; ++i) {
    const double a = ang(rng), s = sc(rng);
    Eigen::Matrix2d lin;
    lin << s * std::cos(a), -s * std::sin(a), s * std::sin(a), s * std::cos(a);
    const Eigen::Vector2d centre(60, 80);
    const auto t = AffineTransform::from(lin, centre - lin * centre + Eigen::Vector2d(tr(rng), tr(rng)));
    const auto back = warp(warp(map, t), t.inverse());
    for (int r = 20; r < 100; ++r)
      for (int c = 20; c < 140; ++c)
        if (back.valid(r, c)) worst_warp = std::max(worst_warp, double(std::abs(back.temps(r, c) - map.temps(r, c))));
  }
  o.require(worst_warp <= kWarpRoundTripC, "warp round trip");

  double max_det = -1e9;
  int pairs = 0;
  for (int i = 0; i < kCorpusSize; ++i) {
    const auto spec = oracle::corpus_spec(i, 0.0);
    const auto ph = generate(spec, 600 + i);
    const auto map = counts_to_temperature(ph.plantar, spec.calibration);
    const FootMask left{ph.truth.masks.at(Foot::Left)}, right{ph.truth.masks.at(Foot::Right)};
    const auto& lm = ph.truth.landmarks;
    for (const auto& p : {align_pair(map, left, lm.at(Foot::Left), map, right, lm.at(Foot::Right)),
                          align_pair(map, right, lm.at(Foot::Right), map, left, lm.at(Foot::Left))}) {
      max_det = std::max(max_det, p.transform.determinant());
      ++pairs;
    }
  }
  o.require(max_det < 0.0, "contralateral determinant");
  o.detail << " affine_max_err=" << worst_affine << " warp_roundtrip_max=" << worst_warp << " C"
           << " pairs=" << pairs << " max_det=" << max_det;
}

// 5 ---------------------------------------------------------------------------

PipelineInputs phantom_inputs(const PhantomSpec& spec, std::uint64_t seed, Phantom* keep = nullptr) {
  auto ph = generate(spec, seed);
  PipelineInputs in;
  in.plantar = ph.plantar;
  in.calibration = spec.calibration;
  in.landmarks = ph.truth.landmarks;
  if (keep) *keep = std::move(ph);
  return in;
}

bool overlaps(const Hotspot& h, const LesionTruth& l) {
  for (const auto& p : h.pixels)
    for (const auto& q : l.pixels)
      if (p == q) return true;
  return false;
}

void detection(Outcome& o) {
  const auto& sites = oracle::lesion_sites();
  int tp = 0, fp = 0, found = 0, warm = 0, rejected_cold = 0;
  for (int i = 0; i < 20; ++i) {
    auto spec = oracle::corpus_spec(100 + i, kSuiteNoiseSigma);
    const Foot foot = i % 2 ? Foot::Right : Foot::Left;
    const auto [u, v] = sites[i % sites.size()];
    const auto shape = i % 3 ? LesionShape::Disc : LesionShape::Square;
    if (i < 10) spec.lesions.push_back({foot, shape, 2.5 + 0.15 * i, u, v, 3.0});
    else if (i < 15) spec.cold_patches.push_back({foot, shape, 2.5 + 0.2 * (i - 10), u, v, 3.0});

    Phantom ph;
    const auto result = run_pipeline(phantom_inputs(spec, 700 + i, &ph));
    for (const auto& h : result.report.hotspots) {
      if (h.verdict != Verdict::Confirmed) {
        rejected_cold += h.verdict == Verdict::RejectedColdContralateral;
        continue;
      }
      bool matched = false;
      for (const auto& l : ph.truth.anomalies) matched |= l.warm && l.foot == h.reference_foot && overlaps(h, l);
      matched ? ++tp : ++fp;
    }
    for (const auto& l : ph.truth.anomalies) {
      if (!l.warm) continue;
      ++warm;
      bool hit = false;
      for (const auto& h : result.report.hotspots)
        hit |= h.verdict == Verdict::Confirmed && h.reference_foot == l.foot && overlaps(h, l);
      found += hit;
    }
  }
  const double precision = tp + fp == 0 ? 0.0 : double(tp) / (tp + fp);
  const double recall = warm == 0 ? 0.0 : double(found) / warm;
  o.require(warm == 10, "suite has 10 warm lesions");
  o.require(precision == 1.0, "precision");
  o.require(recall == 1.0, "recall");

  // Threshold edge on a noiseless phantom, lesion in the flat heel region.
  auto candidates = [&](double delta) {
    PhantomSpec spec;
    spec.lesions.push_back({Foot::Left, LesionShape::Disc, delta, 26.0, 0.0, 3.0});
    const auto r = run_pipeline(phantom_inputs(spec, 42));
    int n = 0;
    for (const auto& h : r.report.hotspots) n += h.reference_foot == Foot::Left;
    return n;
  };
  const int at_219 = candidates(2.19), at_220 = candidates(2.2);
  o.require(at_219 == 0, "2.19 C yields no candidate");
  o.require(at_220 >= 1, "2.2 C yields a candidate");
  o.detail << " precision=" << precision << " recall=" << recall << " (tp=" << tp << " fp=" << fp << " found=" << found
           << "/" << warm << ") rejected_cold=" << rejected_cold << " candidates@2.19=" << at_219
           << " candidates@2.20=" << at_220;
}

// 6 ---------------------------------------------------------------------------

void roi_arithmetic(Outcome& o) {
  double worst = 0;
  for (int i = 0; i < 5; ++i) {
    const auto spec = oracle::corpus_spec(200 + i, 0.3);
    const auto r = run_pipeline(phantom_inputs(spec, 800 + i));
    const auto& map = r.segmentation.map;
    const Foot a = r.report.roi_stats.foot_a, b = r.report.roi_stats.foot_b;
    for (int k = 0; k < 4; ++k) {
      const auto region = static_cast<Region>(k);
      worst = std::max(worst, std::abs(r.report.roi_stats.rows[k].foot_a_mt_c -
                                        oracle::brute_mean(map.temps, r.rois.at(a)[region])));
      worst = std::max(worst, std::abs(r.report.roi_stats.rows[k].foot_b_mt_c -
                                        oracle::brute_mean(map.temps, r.rois.at(b)[region])));
    }
  }
  o.require(worst <= kRoiMeanTol, "ROI MT vs brute force");

  // Toe row arithmetic on constructed maps.
  RoiSet rois;
  rois.foot = Mask::Ones(40, 20);
  for (auto& band : rois.bands) band = Mask::Zero(40, 20);
  rois.bands[0].topRows(8).setOnes();
  rois.bands[1].middleRows(8, 10).setOnes();
  rois.bands[2].bottomRows(10).setOnes();
  TemperatureMap ma, mb;
  ma.temps = Grid<float>::Constant(40, 20, 33.0f);
  mb.temps = Grid<float>::Constant(40, 20, 32.0f);
  ma.temps.topRows(8).setConstant(33.35f);
  mb.temps.topRows(8).setConstant(32.54f);
  const auto stats = roi_stats(ma, rois, Foot::Left, mb, rois);
  const double toe_diff = stats[Region::Toe].diff_c;
  const std::string csv = roi_stats_csv(stats);
  o.require(std::abs(toe_diff - 0.81) <= kTableDiffTol, "33.35 - 32.54 = 0.81");
  o.require(csv.find("\nToe,33.35,32.54,0.81\n") != std::string::npos, "CSV toe row");

  // Overall MT is invariant to how the foot is partitioned.
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<float> temp(26.0f, 36.0f);
  std::uniform_int_distribution<int> parts(2, 6);
  double worst_partition = 0;
  int checked = 0;
  for (int m = 0; m < kPartitionMasks; ++m) {
    TemperatureMap map;
    map.temps.resize(60, 80);
    Mask foot = Mask::Zero(60, 80);
    for (Eigen::Index i = 0; i < map.temps.size(); ++i) {
      map.temps.data()[i] = temp(rng);
      foot.data()[i] = (rng() % 3) != 0;
    }
    const int k = parts(rng);
    std::vector<Mask> pieces(k, Mask::Zero(60, 80));
    for (Eigen::Index i = 0; i < foot.size(); ++i)
      if (foot.data()[i]) pieces[rng() % k].data()[i] = 1;
    double weighted = 0;
    long n = 0;
    for (const auto& p : pieces) {
      const long cnt = p.cast<long>().sum();
      if (cnt == 0) continue;
      weighted += mean_temperature(map, p) * cnt;
      n += cnt;
    }
    worst_partition = std::max(worst_partition, std::abs(weighted / n - mean_temperature(map, foot)));
    ++checked;
  }
  o.require(worst_partition <= kRoiMeanTol, "overall MT partition invariance");
  o.detail << " roi_mt_max_err=" << worst << " toe_diff=" << toe_diff << " partition_masks=" << checked
           << " partition_max_err=" << worst_partition;
}

// 7 ---------------------------------------------------------------------------

void acquisition(Outcome& o) {
  PhantomSpec spec;
  spec.noise_sigma_c = 0.1;
  CaptureServer server([&] { return phantom_source(spec, 9); });
  server.start();
  const auto rx = fetch_sequence("127.0.0.1", server.port());
  server.stop();
  const std::vector<View> order{View::plantar(), View::periphery(0), View::periphery(90), View::periphery(180),
                                View::periphery(270)};
  bool in_order = rx.frames.size() == order.size();
  for (std::size_t i = 0; in_order && i < order.size(); ++i) in_order = rx.frames[i].view == order[i];
  o.require(rx.started && rx.complete, "sequence start/end delivered");
  o.require(in_order, "plantar then 0/90/180/270");
  o.require(rx.dropped == 0, "clean transfer");

  std::vector<std::uint8_t> stream;
  std::vector<WireMessage> sent;
  run_sequence(phantom_source(spec, 9), [&](const WireMessage& m) {
    sent.push_back(m);
    append_message(stream, m);
  });
  StreamDecoder bytewise;
  std::vector<WireMessage> got;
  for (auto b : stream) {
    bytewise.feed(std::span<const std::uint8_t>(&b, 1));
    for (auto& m : bytewise.take()) got.push_back(std::move(m));
  }
  o.require(got == sent && got == decode_stream(stream), "byte-by-byte decode");

  // Corrupt the checksum of the third frame message.
  auto corrupted = stream;
  std::size_t off = 0;
  for (int i = 0; i < 3; ++i) off += kWireHeaderSize + sent[i].payload.size() + kWireTrailerSize;
  corrupted[off + kWireHeaderSize + sent[3].payload.size()] ^= 0xFF;
  StreamDecoder chunked;
  std::vector<WireMessage> survived;
  for (auto b : corrupted) {
    chunked.feed(std::span<const std::uint8_t>(&b, 1));
    for (auto& m : chunked.take()) survived.push_back(std::move(m));
  }
  auto expected = sent;
  expected.erase(expected.begin() + 3);
  o.require(chunked.dropped() == 1 && chunked.issues().size() == 1, "exactly one reported drop");
  o.require(survived == expected, "other messages intact");
  o.detail << " frames=" << rx.frames.size() << " messages=" << sent.size() << " bytes=" << stream.size()
           << " drops_after_corruption=" << chunked.dropped();
}

// 8 ---------------------------------------------------------------------------

void determinism_parity(Outcome& o) {
  const fs::path root = fs::temp_directory_path() / ("thermofoot_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);

  PhantomSpec spec = oracle::corpus_spec(300, 0.2);
  spec.lesions.push_back({Foot::Right, LesionShape::Disc, 3.0, -20.0, -8.0, 3.0});
  spec.cold_patches.push_back({Foot::Right, LesionShape::Square, 2.8, 25.0, 0.0, 3.0});
  std::ofstream(root / "spec.json") << json(spec).dump();
  const std::string p = (root / "p").string();
  o.require(run_cli("--seed 17 --out-dir " + p + " phantom --spec " + (root / "spec.json").string()).exit_code == 0,
            "cli phantom");
  o.require(run_cli("analyze " + p + "/session.json --out-dir " + (root / "a").string()).exit_code == 0, "cli analyze 1");
  o.require(run_cli("analyze " + p + "/session.json --out-dir " + (root / "b").string()).exit_code == 0, "cli analyze 2");
  const std::string ra = slurp(root / "a/report.json"), rb = slurp(root / "b/report.json");
  o.require(!ra.empty() && ra == rb, "repeated CLI reports identical");
  o.require(slurp(root / "a/roi_stats.csv") == slurp(root / "b/roi_stats.csv"), "repeated CSV identical");

  // Same inputs through the service.
  service::HttpOptions opt;
  opt.root = root / "service";
  opt.port = 0;
  service::HttpService svc(opt);
  const int port = svc.bind();
  std::thread th([&] { svc.listen(); });
  svc.wait_until_ready();
  httplib::Client c("127.0.0.1", port);
  c.set_read_timeout(60, 0);

  const auto frame = io::read_raw_frame(p + "/plantar.raw");
  const auto bytes = io::read_bytes(p + "/plantar.raw");
  const json session = json::parse(slurp(p + "/session.json"));
  bool ok = true;
  auto step = [&](const httplib::Result& r, const char* what) {
    const bool good = r && r->status == 200;
    if (!good) o.require(false, std::string("service ") + what);
    ok = ok && good;
    return good ? json::parse(r->body) : json();
  };
  const std::string id = step(c.Post("/sessions", json{{"subject", session.at("subject")}}.dump(), "application/json"),
                              "create")
                             .value("id", "");
  const std::string base = "/sessions/" + id;
  httplib::MultipartFormDataItems items{
      {"frame", std::string(bytes.begin(), bytes.end()), "plantar.raw", "application/octet-stream"},
      {"sidecar", frame_sidecar(frame).dump(), "plantar.raw.json", "application/json"},
      {"calibration", slurp(p + "/calibration.json"), "calibration.json", "application/json"}};
  step(c.Post(base + "/frames", items), "upload");
  step(c.Post(base + "/scribbles", "{}", "application/json"), "segment");
  step(c.Post(base + "/landmarks", session.at("landmarks").dump(), "application/json"), "landmarks");
  step(c.Post(base + "/analyze"), "analyze");
  const json svc_report = step(c.Get(base + "/report"), "report");
  svc.stop();
  th.join();

  std::string where;
  const bool agree = ok && reports_agree(json::parse(ra), svc_report, kParityTol, &where);
  o.require(agree, "CLI/service parity" + (where.empty() ? "" : " at " + where));
  int confirmed = 0;
  for (const auto& h : svc_report.value("hotspots", json::array())) confirmed += h.at("verdict") == "Confirmed";
  o.detail << " cli_reports_identical=" << (ra == rb) << " cli_service_agree(1e-9)=" << agree
           << " confirmed=" << confirmed;
  fs::remove_all(root);
}

} // namespace

int main() {
  bool all = true;
  all &= report_line(1, "calibration", calibration, kRuntimeCalibrationS);
  all &= report_line(2, "min-cut exactness", min_cut, kRuntimeCutS);
  all &= report_line(3, "segmentation quality", segmentation, kRuntimeSegmentationS);
  all &= report_line(4, "registration", registration, 0);
  all &= report_line(5, "detection and validation", detection, kRuntimeDetectionS);
  all &= report_line(6, "ROI arithmetic", roi_arithmetic, 0);
  all &= report_line(7, "acquisition protocol", acquisition, kRuntimeAcquisitionS);
  all &= report_line(8, "determinism and parity", determinism_parity, 0);
  std::printf("acceptance: %s\n", all ? "PASS" : "FAIL");
  return all ? 0 : 1;
}
