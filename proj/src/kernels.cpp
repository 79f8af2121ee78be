#include "npmix/kernels.hpp"

#include <cmath>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace npmix::kernels {

namespace {

constexpr double inv_sqrt_2pi = 0.3989422804014326779399461;

// Shared inclusion predicate: a point contributes to a node (and vice versa)
// iff |node - point| <= 8h. kde_grid and the quadrature evaluators use the
// same test, so the density update and the score evaluation stay adjoint.
inline double kde_node(double u, std::span<const double> x, std::span<const double> w,
                       double cut, double inv_h) {
  double acc = 0.0;
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double dz = u - x[i];
    if (dz > cut || dz < -cut) continue;
    acc += w[i] * gauss(dz * inv_h);
  }
  return acc;
}

inline double quad_eval(const GridSpan& cell, double h, double y) {
  if (y < cell.lo || y > cell.hi) return cell.oob;
  const double cut = kernel_cutoff * h;
  const double inv_h = 1.0 / h;
  const int last = cell.points - 1;
  int g0 = static_cast<int>(std::ceil((y - cut - cell.lo) / cell.step));
  int g1 = static_cast<int>(std::floor((y + cut - cell.lo) / cell.step));
  if (g0 < 0) g0 = 0;
  if (g1 > last) g1 = last;
  double acc = 0.0;
  for (int g = g0; g <= g1; ++g) {
    const double dz = y - (cell.lo + cell.step * g);
    if (dz > cut || dz < -cut) continue;
    const double wgt = (g == 0 || g == last) ? 0.5 : 1.0;
    acc += wgt * gauss(dz * inv_h) * cell.values[g];
  }
  return acc * cell.step * inv_h;
}

}  // namespace

double gauss(double u) { return inv_sqrt_2pi * std::exp(-0.5 * u * u); }

void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void kde_grid(std::span<const double> x, std::span<const double> w, const Grid& grid,
              double h, std::span<double> out) {
  double wsum = 0.0;
  for (double wi : w) wsum += wi;
  const double cut = kernel_cutoff * h;
  const double inv_h = 1.0 / h;
  const double scale = inv_h / wsum;
  const int points = grid.points();
#pragma omp parallel for schedule(static)
  for (int g = 0; g < points; ++g) {
    out[g] = kde_node(grid.at(g), x, w, cut, inv_h) * scale;
  }
}

void kde_grid_serial(std::span<const double> x, std::span<const double> w, const Grid& grid,
                     double h, std::span<double> out) {
  double wsum = 0.0;
  for (double wi : w) wsum += wi;
  const double cut = kernel_cutoff * h;
  const double inv_h = 1.0 / h;
  const double scale = inv_h / wsum;
  const int points = grid.points();
  for (int g = 0; g < points; ++g) {
    out[g] = kde_node(grid.at(g), x, w, cut, inv_h) * scale;
  }
}

namespace {

// Node-to-node kernel values depend only on the index distance; precompute
// one row of them. trap end-weights are applied per source node.
struct ConvPlan {
  std::vector<double> kval;  // kval[dg] = K(dg*step/h)/h * step
  int window;
};

ConvPlan make_plan(const Grid& grid, double h) {
  const double cut = kernel_cutoff * h;
  int window = static_cast<int>(cut / grid.step());
  if (window > grid.points() - 1) window = grid.points() - 1;
  ConvPlan plan;
  plan.window = window;
  plan.kval.resize(window + 1);
  const double inv_h = 1.0 / h;
  for (int dg = 0; dg <= window; ++dg) {
    plan.kval[dg] = gauss(dg * grid.step() * inv_h) * inv_h * grid.step();
  }
  return plan;
}

inline double conv_node(int g, const ConvPlan& plan, std::span<const double> in, int last) {
  int g0 = g - plan.window;
  int g1 = g + plan.window;
  if (g0 < 0) g0 = 0;
  if (g1 > last) g1 = last;
  double acc = 0.0;
  for (int gp = g0; gp <= g1; ++gp) {
    const double wgt = (gp == 0 || gp == last) ? 0.5 : 1.0;
    acc += wgt * plan.kval[gp > g ? gp - g : g - gp] * in[gp];
  }
  return acc;
}

}  // namespace

void convolve_grid(const Grid& grid, double h, std::span<const double> in,
                   std::span<double> out) {
  const ConvPlan plan = make_plan(grid, h);
  const int last = grid.points() - 1;
  const int points = grid.points();
#pragma omp parallel for schedule(static)
  for (int g = 0; g < points; ++g) {
    out[g] = conv_node(g, plan, in, last);
  }
}

void convolve_grid_serial(const Grid& grid, double h, std::span<const double> in,
                          std::span<double> out) {
  const ConvPlan plan = make_plan(grid, h);
  const int last = grid.points() - 1;
  const int points = grid.points();
  for (int g = 0; g < points; ++g) {
    out[g] = conv_node(g, plan, in, last);
  }
}

double convolve_at(const Grid& grid, double h, std::span<const double> in, double y,
                   double oob) {
  const GridSpan cell{grid.lo(), grid.hi(), grid.step(), grid.points(), in.data(), oob};
  return quad_eval(cell, h, y);
}

void log_score_table(const double* data, int n, int d, const int* block_of_col,
                     const GridSpan* cells, int m, int block_count, double bandwidth,
                     const double* log_pi, double* out) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const double* row = data + static_cast<std::size_t>(i) * d;
    for (int k = 0; k < m; ++k) {
      double s = log_pi[k];
      const GridSpan* krow = cells + static_cast<std::size_t>(k) * block_count;
      for (int j = 0; j < d; ++j) {
        s += quad_eval(krow[block_of_col[j]], bandwidth, row[j]);
      }
      out[static_cast<std::size_t>(i) * m + k] = s;
    }
  }
}

void log_score_table_serial(const double* data, int n, int d, const int* block_of_col,
                            const GridSpan* cells, int m, int block_count, double bandwidth,
                            const double* log_pi, double* out) {
  for (int i = 0; i < n; ++i) {
    const double* row = data + static_cast<std::size_t>(i) * d;
    for (int k = 0; k < m; ++k) {
      double s = log_pi[k];
      const GridSpan* krow = cells + static_cast<std::size_t>(k) * block_count;
      for (int j = 0; j < d; ++j) {
        s += quad_eval(krow[block_of_col[j]], bandwidth, row[j]);
      }
      out[static_cast<std::size_t>(i) * m + k] = s;
    }
  }
}

}  // namespace npmix::kernels
