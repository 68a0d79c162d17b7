#pragma once

#include "thermofoot/grid.hpp"
#include "thermofoot/radiometry.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace thermofoot {

/// Single-channel image in [0, 255] plus pixels that carried no valid temperature.
struct IntensityImage {
  Grid<double> values;
  Mask invalid;
};

/// Rescales finite temperatures affinely onto [0, 255]. Invalid pixels become 0 and are flagged.
IntensityImage normalize_for_segmentation(const TemperatureMap& map);

namespace trimap {
inline constexpr std::uint8_t DefiniteBackground = 0;
inline constexpr std::uint8_t DefiniteForeground = 1;
inline constexpr std::uint8_t ProbableBackground = 2;
inline constexpr std::uint8_t ProbableForeground = 3;

inline bool is_definite(std::uint8_t label) { return label <= DefiniteForeground; }
inline bool is_foreground(std::uint8_t label) {
  return label == DefiniteForeground || label == ProbableForeground;
}
} // namespace trimap

using Trimap = Grid<std::uint8_t>;

struct GaussianComponent {
  double weight = 0.0;
  double mean = 0.0;
  double variance = 1.0;
};

/// One-dimensional Gaussian mixture over intensities.
class GmmModel {
public:
  GmmModel() = default;
  explicit GmmModel(std::vector<GaussianComponent> components) : components_(std::move(components)) {}

  /// Components seeded from K equal-count quantile bins of the sorted values.
  static GmmModel from_quantiles(std::span<const double> values, int k, double variance_floor);

  /// Maximum-likelihood refit from hard component assignments. Components that
  /// receive no samples keep their parameters with zero weight.
  static GmmModel from_assignments(std::span<const double> values, std::span<const int> assignment,
                                   const GmmModel& previous, double variance_floor);

  /// -log(weight_k) - log N(x; mean_k, variance_k), for one component.
  double component_cost(int k, double x) const;
  /// Minimum component cost over components with positive weight.
  double cost(double x) const;
  int best_component(double x) const;

  const std::vector<GaussianComponent>& components() const { return components_; }
  int size() const { return static_cast<int>(components_.size()); }

private:
  std::vector<GaussianComponent> components_;
};

struct Scribble {
  Pixel pixel;
  bool foreground = false;
};

struct GrabCutParams {
  int components = 5;
  int iterations = 5;
  double gamma = 50.0;
  double variance_floor = 1e-4;
};

enum class MaskProvenance { Automatic, UserCorrected };

struct FootMask {
  Mask mask;
  MaskProvenance provenance = MaskProvenance::Automatic;

  int area() const { return static_cast<int>(mask.template cast<int>().sum()); }
};

struct GrabCutResult {
  FootMask mask;
  Trimap labels;
  /// Total energy after each completed iteration.
  std::vector<double> energies;
};

/// Builds the initial trimap: exterior of `rect` definite background, interior
/// probable foreground, then scribbles and invalid pixels as definite labels.
Trimap initial_trimap(const IntensityImage& image, const Rect& rect, std::span<const Scribble> scribbles);

/// Data + smoothness energy of a labelling under the given mixtures.
double grabcut_energy(const IntensityImage& image, const Mask& foreground, const GmmModel& fg,
                      const GmmModel& bg, double gamma);

GrabCutResult grabcut(const IntensityImage& image, const Rect& init_rect,
                      std::span<const Scribble> scribbles = {}, const GrabCutParams& params = {});

inline constexpr int kMinFootAreaPx = 100;

struct FeetMasks {
  FootMask left;
  FootMask right;
};

/// Keeps the two largest 8-connected components. The one whose centroid has the
/// smaller column is the subject's right foot (plantar view from below).
FeetMasks split_feet(const FootMask& mask, int min_foot_area = kMinFootAreaPx);

} // namespace thermofoot
