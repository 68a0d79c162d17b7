#include "thermofoot/segmentation.hpp"

#include "thermofoot/components.hpp"
#include "thermofoot/error.hpp"
#include "thermofoot/maxflow.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace thermofoot {

IntensityImage normalize_for_segmentation(const TemperatureMap& map) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < map.temps.size(); ++i) {
    const float v = map.temps.data()[i];
    if (!is_valid(v)) continue;
    lo = std::min(lo, double(v));
    hi = std::max(hi, double(v));
  }
  if (!(hi > lo)) throw Error(Errc::ConstantImage, "map has fewer than two distinct valid temperatures");

  const double scale = 255.0 / (hi - lo);
  IntensityImage out;
  out.values.resize(map.temps.rows(), map.temps.cols());
  out.invalid.resize(map.temps.rows(), map.temps.cols());
  for (Eigen::Index i = 0; i < map.temps.size(); ++i) {
    const float v = map.temps.data()[i];
    const bool ok = is_valid(v);
    out.values.data()[i] = ok ? (double(v) - lo) * scale : 0.0;
    out.invalid.data()[i] = ok ? 0 : 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gaussian mixture

namespace {

GaussianComponent estimate(std::span<const double> values, double total, double variance_floor) {
  GaussianComponent g;
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= n;
  g.weight = n / total;
  g.mean = mean;
  g.variance = std::max(var, variance_floor);
  return g;
}

} // namespace

GmmModel GmmModel::from_quantiles(std::span<const double> values, int k, double variance_floor) {
  if (values.empty()) throw Error(Errc::InvalidArgument, "cannot fit a mixture to zero samples");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const std::size_t bins = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 1)), n);
  std::vector<GaussianComponent> comps;
  comps.reserve(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    const std::size_t begin = b * n / bins;
    const std::size_t end = (b + 1) * n / bins;
    comps.push_back(estimate(std::span(sorted).subspan(begin, end - begin), double(n), variance_floor));
  }
  return GmmModel(std::move(comps));
}

GmmModel GmmModel::from_assignments(std::span<const double> values, std::span<const int> assignment,
                                    const GmmModel& previous, double variance_floor) {
  const int k = previous.size();
  std::vector<double> sum(static_cast<std::size_t>(k), 0.0), count(static_cast<std::size_t>(k), 0.0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum[static_cast<std::size_t>(assignment[i])] += values[i];
    count[static_cast<std::size_t>(assignment[i])] += 1.0;
  }
  std::vector<double> sq(static_cast<std::size_t>(k), 0.0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto a = static_cast<std::size_t>(assignment[i]);
    const double d = values[i] - sum[a] / count[a];
    sq[a] += d * d;
  }
  std::vector<GaussianComponent> comps = previous.components();
  const double total = static_cast<double>(values.size());
  for (std::size_t j = 0; j < comps.size(); ++j) {
    if (count[j] == 0.0) {
      comps[j].weight = 0.0;
      continue;
    }
    comps[j].weight = count[j] / total;
    comps[j].mean = sum[j] / count[j];
    comps[j].variance = std::max(sq[j] / count[j], variance_floor);
  }
  return GmmModel(std::move(comps));
}

double GmmModel::component_cost(int k, double x) const {
  const auto& g = components_[static_cast<std::size_t>(k)];
  if (!(g.weight > 0.0)) return std::numeric_limits<double>::infinity();
  const double d = x - g.mean;
  return -std::log(g.weight) + 0.5 * std::log(2.0 * std::numbers::pi * g.variance) +
         d * d / (2.0 * g.variance);
}

int GmmModel::best_component(double x) const {
  int best = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int k = 0; k < size(); ++k) {
    const double c = component_cost(k, x);
    if (c < best_cost) {
      best_cost = c;
      best = k;
    }
  }
  return best;
}

double GmmModel::cost(double x) const { return component_cost(best_component(x), x); }

// ---------------------------------------------------------------------------
// Graph construction

namespace {

struct Neighbor {
  int dr, dc;
  double inv_dist;
};

// Half of the 8-neighbourhood; every unordered pair is visited once.
const std::array<Neighbor, 4> kHalfNeighborhood{{
    {0, 1, 1.0},
    {1, 0, 1.0},
    {1, 1, 1.0 / std::numbers::sqrt2},
    {1, -1, 1.0 / std::numbers::sqrt2},
}};

double smoothness_beta(const Grid<double>& values) {
  const int rows = static_cast<int>(values.rows()), cols = static_cast<int>(values.cols());
  double sum = 0.0;
  long pairs = 0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      for (const auto& n : kHalfNeighborhood) {
        const int nr = r + n.dr, nc = c + n.dc;
        if (nr < 0 || nr >= rows || nc < 0 || nc >= cols) continue;
        const double d = values(r, c) - values(nr, nc);
        sum += d * d;
        ++pairs;
      }
  if (pairs == 0 || sum == 0.0) return 0.0;
  return 1.0 / (2.0 * sum / static_cast<double>(pairs));
}

// Weights per pixel for each of the four half-neighbourhood directions (0 when off-grid).
Grid<double> pairwise_weights(const Grid<double>& values, double gamma) {
  const int rows = static_cast<int>(values.rows()), cols = static_cast<int>(values.cols());
  const double beta = smoothness_beta(values);
  Grid<double> w = Grid<double>::Zero(rows * cols, 4);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      for (std::size_t k = 0; k < kHalfNeighborhood.size(); ++k) {
        const auto& n = kHalfNeighborhood[k];
        const int nr = r + n.dr, nc = c + n.dc;
        if (nr < 0 || nr >= rows || nc < 0 || nc >= cols) continue;
        const double d = values(r, c) - values(nr, nc);
        w(r * cols + c, static_cast<Eigen::Index>(k)) = gamma * std::exp(-beta * d * d) * n.inv_dist;
      }
  return w;
}

double energy_with_weights(const Grid<double>& values, const Mask& fg, const GmmModel& fg_model,
                           const GmmModel& bg_model, const Grid<double>& weights) {
  const int rows = static_cast<int>(values.rows()), cols = static_cast<int>(values.cols());
  double data = 0.0, smooth = 0.0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      data += fg(r, c) ? fg_model.cost(values(r, c)) : bg_model.cost(values(r, c));
      for (std::size_t k = 0; k < kHalfNeighborhood.size(); ++k) {
        const auto& n = kHalfNeighborhood[k];
        const int nr = r + n.dr, nc = c + n.dc;
        if (nr < 0 || nr >= rows || nc < 0 || nc >= cols) continue;
        if (fg(r, c) != fg(nr, nc)) smooth += weights(r * cols + c, static_cast<Eigen::Index>(k));
      }
    }
  return data + smooth;
}

struct ClassSamples {
  std::vector<double> values;
  std::vector<int> assignment;
};

void collect(const Grid<double>& values, const Mask& fg, ClassSamples& fg_s, ClassSamples& bg_s) {
  fg_s.values.clear();
  bg_s.values.clear();
  for (Eigen::Index i = 0; i < values.size(); ++i)
    (fg.data()[i] ? fg_s : bg_s).values.push_back(values.data()[i]);
}

GmmModel relearn(ClassSamples& s, const GmmModel& model, double variance_floor) {
  s.assignment.resize(s.values.size());
  for (std::size_t i = 0; i < s.values.size(); ++i) s.assignment[i] = model.best_component(s.values[i]);
  return GmmModel::from_assignments(s.values, s.assignment, model, variance_floor);
}

} // namespace

Trimap initial_trimap(const IntensityImage& image, const Rect& rect, std::span<const Scribble> scribbles) {
  const int rows = static_cast<int>(image.values.rows()), cols = static_cast<int>(image.values.cols());
  Trimap t = Trimap::Constant(rows, cols, trimap::DefiniteBackground);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (rect.contains(r, c)) t(r, c) = trimap::ProbableForeground;
  for (const auto& s : scribbles) {
    if (s.pixel.row < 0 || s.pixel.row >= rows || s.pixel.col < 0 || s.pixel.col >= cols)
      throw Error(Errc::InvalidArgument, "scribble outside the image");
    t(s.pixel.row, s.pixel.col) = s.foreground ? trimap::DefiniteForeground : trimap::DefiniteBackground;
  }
  for (Eigen::Index i = 0; i < t.size(); ++i)
    if (image.invalid.data()[i]) t.data()[i] = trimap::DefiniteBackground;
  return t;
}

double grabcut_energy(const IntensityImage& image, const Mask& foreground, const GmmModel& fg,
                      const GmmModel& bg, double gamma) {
  return energy_with_weights(image.values, foreground, fg, bg, pairwise_weights(image.values, gamma));
}

GrabCutResult grabcut(const IntensityImage& image, const Rect& init_rect, std::span<const Scribble> scribbles,
                      const GrabCutParams& params) {
  const int rows = static_cast<int>(image.values.rows()), cols = static_cast<int>(image.values.cols());
  if (init_rect.row < 0 || init_rect.col < 0 || init_rect.height <= 0 || init_rect.width <= 0 ||
      init_rect.row + init_rect.height > rows || init_rect.col + init_rect.width > cols)
    throw Error(Errc::InvalidRect, "initial rectangle must lie inside the image");
  if (init_rect.area() < 64) throw Error(Errc::InvalidRect, "initial rectangle must cover at least 64 px");
  if (params.iterations < 1) throw Error(Errc::InvalidArgument, "iterations must be >= 1");

  GrabCutResult result;
  result.labels = initial_trimap(image, init_rect, scribbles);
  const Trimap& labels = result.labels;
  Mask fg = labels.unaryExpr([](std::uint8_t l) { return std::uint8_t(trimap::is_foreground(l)); });
  if (fg.cast<int>().sum() == 0) throw Error(Errc::EmptyForeground, "no candidate foreground pixels");
  if (fg.cast<int>().sum() == rows * cols)
    throw Error(Errc::InvalidRect, "no background pixels: rectangle covers the whole image");

  const Grid<double> weights = pairwise_weights(image.values, params.gamma);
  // Hard-constraint capacity: more than any pixel's total smoothness weight.
  const double hard = 1.0 + weights.rowwise().sum().maxCoeff() * 2.0;

  ClassSamples fg_s, bg_s;
  collect(image.values, fg, fg_s, bg_s);
  GmmModel fg_model = GmmModel::from_quantiles(fg_s.values, params.components, params.variance_floor);
  GmmModel bg_model = GmmModel::from_quantiles(bg_s.values, params.components, params.variance_floor);

  for (int it = 0; it < params.iterations; ++it) {
    if (it > 0) {
      collect(image.values, fg, fg_s, bg_s);
      fg_model = relearn(fg_s, fg_model, params.variance_floor);
      bg_model = relearn(bg_s, bg_model, params.variance_floor);
    }

    FlowGraph graph(rows * cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        const int node = r * cols + c;
        const std::uint8_t l = labels(r, c);
        if (l == trimap::DefiniteForeground) {
          graph.add_terminal_weights(node, hard, 0.0);
        } else if (l == trimap::DefiniteBackground) {
          graph.add_terminal_weights(node, 0.0, hard);
        } else {
          const double v = image.values(r, c);
          const double cost_fg = fg_model.cost(v), cost_bg = bg_model.cost(v);
          // Source side = foreground: s->v is paid when v ends up background.
          // Shifting both by their minimum keeps capacities nonnegative.
          const double shift = std::min(cost_fg, cost_bg);
          graph.add_terminal_weights(node, cost_bg - shift, cost_fg - shift);
        }
        for (std::size_t k = 0; k < kHalfNeighborhood.size(); ++k) {
          const double w = weights(node, static_cast<Eigen::Index>(k));
          if (w <= 0.0) continue;
          const auto& n = kHalfNeighborhood[k];
          graph.add_edge(node, (r + n.dr) * cols + (c + n.dc), w, w);
        }
      }
    graph.max_flow();

    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        const std::uint8_t l = labels(r, c);
        if (trimap::is_definite(l))
          fg(r, c) = l == trimap::DefiniteForeground;
        else
          fg(r, c) = graph.in_source_segment(r * cols + c) ? 1 : 0;
      }
    if (fg.cast<int>().sum() == 0) throw Error(Errc::EmptyForeground, "segmentation assigned no foreground");
    result.energies.push_back(energy_with_weights(image.values, fg, fg_model, bg_model, weights));
  }

  result.mask.mask = std::move(fg);
  result.mask.provenance = scribbles.empty() ? MaskProvenance::Automatic : MaskProvenance::UserCorrected;
  return result;
}

FeetMasks split_feet(const FootMask& mask, int min_foot_area) {
  auto comps = connected_components(mask.mask);
  std::erase_if(comps, [&](const Component& c) { return c.area() < min_foot_area; });
  if (comps.size() < 2)
    throw Error(Errc::FeetNotSeparable, "found " + std::to_string(comps.size()) +
                                            " component(s) of at least " + std::to_string(min_foot_area) +
                                            " px; need 2");
  std::stable_sort(comps.begin(), comps.end(),
                   [](const Component& a, const Component& b) { return a.area() > b.area(); });
  const Component* right = &comps[0];
  const Component* left = &comps[1];
  if (left->centroid_col < right->centroid_col) std::swap(left, right);

  const int rows = static_cast<int>(mask.mask.rows()), cols = static_cast<int>(mask.mask.cols());
  return {FootMask{left->to_mask(rows, cols), mask.provenance},
          FootMask{right->to_mask(rows, cols), mask.provenance}};
}

} // namespace thermofoot
