#pragma once

#include "thermofoot/grid.hpp"
#include "thermofoot/radiometry.hpp"
#include "thermofoot/registration.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace thermofoot {

// Synthetic plantar scenes with known ground truth.
//
// Each foot is drawn from a canonical left-foot outline in (u, v) coordinates:
// u runs from the toe tip (u = -41) to the back of the heel (u = +43), v is
// lateral with the big toe at negative v. The left foot is placed with
// row = u, col = v; the right foot is the mirror (col = -v) so both big toes
// face the image centre.

enum class LesionShape { Disc, Square };

struct Lesion {
  Foot foot = Foot::Left;
  LesionShape shape = LesionShape::Disc;
  double delta_c = 0.0;
  double u = 0.0;       // canonical centre
  double v = 0.0;
  double radius = 3.0;  // disc radius or square half-size, canonical units
};

struct FootPlacement {
  Point<> center{60.0, 118.0};  // image (row, col) of canonical origin
  double rotation_deg = 0.0;
  double scale = 1.0;
};

struct PhantomSpec {
  int width = 160;
  int height = 120;
  double background_temp_c = 24.0;
  std::map<Foot, double> base_temp_c{{Foot::Left, 31.5}, {Foot::Right, 31.5}};
  /// Temperature offset reached at the toe tip, blended linearly from mid-foot.
  double toe_offset_c = -0.8;
  double noise_sigma_c = 0.0;
  std::vector<Lesion> lesions;       // warm, delta_c > 0
  std::vector<Lesion> cold_patches;  // applied with -|delta_c|
  std::map<Foot, FootPlacement> placement{
      {Foot::Left, {{60.0, 118.0}, -4.0, 1.0}},
      {Foot::Right, {{60.0, 42.0}, 4.0, 1.0}},
  };
  CalibrationCurve calibration{0.01, -40.0, 0.0, 0.0, {-40.0, 120.0}};
  std::int64_t captured_at_ms = 1'500'000'000'000;
  std::string frame_prefix;  // empty: "phantom-s<seed>"
};

/// Ground-truth lesion footprint in image pixels.
struct LesionTruth {
  Foot foot = Foot::Left;     // foot carrying the anomaly
  bool warm = true;           // false for a cold contralateral patch
  double delta_c = 0.0;
  BoundingBox bbox;
  std::vector<Pixel> pixels;
  /// Reference foot under which the anomaly shows as a positive difference.
  Foot expected_reference() const { return warm ? foot : opposite(foot); }
  /// Expected verdict of the candidate it produces.
  bool expect_confirmed() const { return warm; }
};

struct GroundTruth {
  std::map<Foot, Mask> masks;
  Mask combined;
  std::map<Foot, LandmarkSet> landmarks;
  std::vector<LesionTruth> anomalies;
  /// Noise-free scene temperatures.
  Grid<float> scene;
  /// Exact contralateral -> reference transform, keyed by reference foot.
  std::map<Foot, AffineTransform> contralateral;
  /// Canonical -> image placement for each foot (includes the right-foot mirror).
  std::map<Foot, AffineTransform> placement;
};

struct Phantom {
  RawFrame plantar;
  GroundTruth truth;
};

bool in_canonical_foot(double u, double v);

/// Canonical landmark positions; index 0..3 = toe tip, medial head, lateral head, heel centre.
std::array<Point<>, 4> canonical_landmarks();

Phantom generate(const PhantomSpec& spec, std::uint64_t seed);

/// Side silhouettes of the leg at C-arm angles 0/90/180/270; 180 is the mirror of 0.
RawFrame generate_periphery(const PhantomSpec& spec, int angle_deg, std::uint64_t seed);

std::string phantom_frame_prefix(const PhantomSpec& spec, std::uint64_t seed);

} // namespace thermofoot
