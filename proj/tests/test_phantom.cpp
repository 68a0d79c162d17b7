#include <doctest.h>

#include "thermofoot/error.hpp"
#include "thermofoot/phantom.hpp"

#include <set>

using namespace thermofoot;

TEST_CASE("phantom generation is deterministic per seed") {
  PhantomSpec spec;
  spec.noise_sigma_c = 0.3;
  const auto a = generate(spec, 42), b = generate(spec, 42), c = generate(spec, 43);
  CHECK((a.plantar.counts == b.plantar.counts).all());
  CHECK(a.plantar.frame_id == b.plantar.frame_id);
  CHECK(!(a.plantar.counts == c.plantar.counts).all());
  CHECK(a.plantar.frame_id != c.plantar.frame_id);
  CHECK(a.plantar.view.kind == ViewKind::Plantar);
}

TEST_CASE("counts invert the calibration to within half an LSB") {
  PhantomSpec spec;
  const auto ph = generate(spec, 1);
  const auto map = counts_to_temperature(ph.plantar, spec.calibration);
  const double half_lsb = 0.5 * spec.calibration.slope;
  double worst = 0;
  for (int r = 0; r < spec.height; ++r)
    for (int c = 0; c < spec.width; ++c)
      worst = std::max(worst, std::abs(double(map.temps(r, c)) - ph.truth.scene(r, c)));
  CHECK(worst <= half_lsb + 1e-5);  // plus float storage
  CHECK((ph.plantar.counts < (1 << 14)).all());
}

TEST_CASE("ground truth is consistent") {
  PhantomSpec spec;
  spec.lesions.push_back({Foot::Left, LesionShape::Disc, 2.5, -34.0, -10.0, 3.0});
  spec.cold_patches.push_back({Foot::Right, LesionShape::Square, 3.0, 30.0, 0.0, 3.0});
  const auto ph = generate(spec, 9);
  const auto& t = ph.truth;

  CHECK(((t.masks.at(Foot::Left) + t.masks.at(Foot::Right)) <= 1).all());
  CHECK((t.combined == (t.masks.at(Foot::Left) + t.masks.at(Foot::Right))).all());
  REQUIRE(t.anomalies.size() == 2);
  for (const auto& a : t.anomalies) {
    CHECK(!a.pixels.empty());
    for (const auto& p : a.pixels) {
      REQUIRE(t.masks.at(a.foot)(p.row, p.col) == 1);
      REQUIRE(a.bbox.min_row <= p.row);
      REQUIRE(p.row <= a.bbox.max_row);
    }
  }
  CHECK(t.anomalies[0].warm);
  CHECK(t.anomalies[0].expected_reference() == Foot::Left);
  CHECK(!t.anomalies[1].warm);
  CHECK(t.anomalies[1].expected_reference() == Foot::Left);

  for (const Foot f : {Foot::Left, Foot::Right}) {
    const auto& lm = t.landmarks.at(f);
    CHECK_NOTHROW(lm.validate(spec.height, spec.width));
    for (int k = 1; k <= 4; ++k) CHECK(t.masks.at(f)(int(std::lround(lm[k].x())), int(std::lround(lm[k].y()))) == 1);
    CHECK(lm[2].y() < lm[3].y());
  }
  // The left foot lies on the image right.
  CHECK(t.landmarks.at(Foot::Left)[1].y() > t.landmarks.at(Foot::Right)[1].y());
}

TEST_CASE("lesion outside the foot is refused") {
  PhantomSpec spec;
  spec.lesions.push_back({Foot::Left, LesionShape::Disc, 2.5, 200.0, 0.0, 3.0});
  CHECK_THROWS_AS(generate(spec, 1), Error);
}

TEST_CASE("periphery views") {
  PhantomSpec spec;
  std::set<std::string> ids;
  for (int angle : {0, 90, 180, 270}) {
    const auto f = generate_periphery(spec, angle, 4);
    CHECK(f.view.kind == ViewKind::Periphery);
    CHECK(f.view.angle_deg == angle);
    ids.insert(f.frame_id);
  }
  ids.insert(generate(spec, 4).plantar.frame_id);
  CHECK(ids.size() == 5);
  const auto f0 = generate_periphery(spec, 0, 4), f180 = generate_periphery(spec, 180, 4);
  CHECK((f180.counts == f0.counts.rowwise().reverse()).all());
  CHECK_THROWS_AS(generate_periphery(spec, 45, 4), Error);
}
