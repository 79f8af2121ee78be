#ifndef NPMIX_KDE_HPP
#define NPMIX_KDE_HPP

#include <span>
#include <vector>

#include "npmix/error.hpp"

namespace npmix {

/// Kernel scale, in the units of the data.
struct Bandwidth {
  double h = 0.0;
};

/// Uniformly spaced abscissae on [lo, hi].
class Grid {
 public:
  Grid() = default;
  Grid(double lo, double hi, int points);

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  int points() const { return points_; }
  double step() const { return step_; }
  double at(int g) const { return lo_ + step_ * g; }

  friend bool operator==(const Grid& a, const Grid& b) = default;

 private:
  double lo_ = 0.0;
  double hi_ = 1.0;
  int points_ = 0;
  double step_ = 0.0;
};

/// A density sampled at the nodes of a grid (per unit of the variable).
struct GridDensity {
  Grid grid;
  std::vector<double> values;
};

/// A positive function sampled at grid nodes; `oob` is the value reported for
/// evaluation points outside [lo, hi].
struct GridFunction {
  Grid grid;
  std::vector<double> values;
  double oob = 0.0;
};

/// Trapezoid quadrature of grid-sampled values.
double trapezoid(const Grid& grid, std::span<const double> values);

/// Rule-of-thumb bandwidth 0.9 * count^(-1/5) * min(SD, IQR/1.34) on the
/// pooled sample. SD uses divisor count-1; IQR uses type-7 linear
/// interpolation quantiles. When exactly one of SD, IQR vanishes the other is
/// used so the result stays positive; both zero is a degenerate-data error.
Bandwidth silverman_bandwidth(std::span<const double> data, std::size_t count);

/// Grid spanning [min - 4h, max + 4h] so that kernel mass leaking outside the
/// grid is below 1e-4 for any data point inside [min, max].
Grid build_grid(double data_min, double data_max, Bandwidth h, int points);

/// Weighted kernel density estimate sampled at the grid nodes:
/// f(u) = sum_i w_i K_h(u - x_i) / sum_i w_i.
GridDensity weighted_kde(std::span<const double> points, std::span<const double> weights,
                         Bandwidth h, const Grid& grid);

/// Kernel smoothing (S f)(u) = int K_h(u - v) f(v) dv by trapezoid quadrature,
/// renormalized so the output integrates to 1 on the grid.
GridDensity linear_smooth(const GridDensity& f, Bandwidth h);

/// Log-domain smoothing (N f)(u) = exp( int K_h(u - v) log max(f(v), floor) dv ).
/// Strictly positive everywhere; not a density, so no renormalization. The
/// returned function reports `floor` for out-of-grid evaluation points.
GridFunction nonlinear_smooth(const GridDensity& f, Bandwidth h, double floor);

/// Piecewise-linear evaluation between bracketing nodes; outside [lo, hi]
/// returns f.oob.
double eval_interp(const GridFunction& f, double y);

}  // namespace npmix

#endif
