#include "npmix/kde.hpp"

#include <algorithm>
#include <cmath>

#include "npmix/kernels.hpp"

namespace npmix {

Grid::Grid(double lo, double hi, int points) : lo_(lo), hi_(hi), points_(points) {
  if (!(std::isfinite(lo) && std::isfinite(hi)) || !(lo < hi)) {
    throw Error(errc::config, "grid endpoints must be finite with lo < hi");
  }
  if (points < 64) {
    throw Error(errc::config, "grid needs at least 64 points");
  }
  step_ = (hi_ - lo_) / (points_ - 1);
}

double trapezoid(const Grid& grid, std::span<const double> values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  sum -= 0.5 * (values.front() + values.back());
  return sum * grid.step();
}

namespace {

// Type-7 quantile: linear interpolation between order statistics.
double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double idx = p * (sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(idx);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = idx - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

Bandwidth silverman_bandwidth(std::span<const double> data, std::size_t count) {
  if (count < 2 || data.size() < 2) {
    throw Error(errc::degenerate_data, "bandwidth selection needs at least two values");
  }
  double mean = 0.0;
  for (double v : data) mean += v;
  mean /= static_cast<double>(data.size());
  double ss = 0.0;
  for (double v : data) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(count - 1));

  std::vector<double> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);

  // min over the positive spread estimates; a zero IQR alone (heavy ties)
  // must not zero out the bandwidth.
  double spread = 0.0;
  if (sd > 0.0 && iqr > 0.0) {
    spread = std::min(sd, iqr / 1.34);
  } else if (sd > 0.0) {
    spread = sd;
  } else if (iqr > 0.0) {
    spread = iqr / 1.34;
  } else {
    throw Error(errc::degenerate_data, "data has zero spread; cannot pick a bandwidth");
  }
  return Bandwidth{0.9 * std::pow(static_cast<double>(count), -0.2) * spread};
}

Grid build_grid(double data_min, double data_max, Bandwidth h, int points) {
  if (!(data_min <= data_max)) {
    throw Error(errc::config, "grid range has min > max");
  }
  if (!(h.h > 0.0) || !std::isfinite(h.h)) {
    throw Error(errc::config, "bandwidth must be positive and finite");
  }
  return Grid(data_min - 4.0 * h.h, data_max + 4.0 * h.h, points);
}

GridDensity weighted_kde(std::span<const double> points, std::span<const double> weights,
                         Bandwidth h, const Grid& grid) {
  if (points.size() != weights.size() || points.empty()) {
    throw Error(errc::config, "points and weights must be equal-length and nonempty");
  }
  double wsum = 0.0;
  for (double w : weights) wsum += w;
  if (!(wsum > 0.0)) {
    throw Error(errc::empty_component, "all kernel weights are zero");
  }
  GridDensity out{grid, std::vector<double>(grid.points())};
  kernels::kde_grid(points, weights, grid, h.h, out.values);
  return out;
}

GridDensity linear_smooth(const GridDensity& f, Bandwidth h) {
  GridDensity out{f.grid, std::vector<double>(f.values.size())};
  kernels::convolve_grid(f.grid, h.h, f.values, out.values);
  const double mass = trapezoid(out.grid, out.values);
  for (double& v : out.values) v /= mass;
  return out;
}

GridFunction nonlinear_smooth(const GridDensity& f, Bandwidth h, double floor) {
  if (!(floor > 0.0)) {
    throw Error(errc::config, "nonlinear smoothing needs a positive floor");
  }
  std::vector<double> logf(f.values.size());
  for (std::size_t g = 0; g < f.values.size(); ++g) {
    logf[g] = std::log(std::max(f.values[g], floor));
  }
  GridFunction out{f.grid, std::vector<double>(f.values.size()), floor};
  kernels::convolve_grid(f.grid, h.h, logf, out.values);
  for (double& v : out.values) v = std::exp(v);
  return out;
}

double eval_interp(const GridFunction& f, double y) {
  const Grid& grid = f.grid;
  if (y < grid.lo() || y > grid.hi()) return f.oob;
  const double pos = (y - grid.lo()) / grid.step();
  const int nearest = static_cast<int>(pos + 0.5);
  if (nearest < grid.points() && grid.at(nearest) == y) return f.values[nearest];
  int g = static_cast<int>(pos);
  if (g > grid.points() - 2) g = grid.points() - 2;
  const double t = (y - grid.at(g)) / grid.step();
  return f.values[g] + t * (f.values[g + 1] - f.values[g]);
}

}  // namespace npmix
