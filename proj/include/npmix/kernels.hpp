#ifndef NPMIX_KERNELS_HPP
#define NPMIX_KERNELS_HPP

#include <span>

#include "npmix/kde.hpp"

// Hot inner loops, each in an OpenMP-parallel and a serial reference form.
// Every parallel loop writes disjoint output slots and keeps a fixed inner
// summation order, so results are bit-identical for any thread count; the
// serial twins exist so tests and the benchmark can assert that.

namespace npmix::kernels {

/// Standard Gaussian density.
double gauss(double u);

/// The Gaussian kernel is treated as zero beyond this many bandwidths.
/// Mass outside +-8 is ~1.2e-15, below every tolerance in the test suite.
inline constexpr double kernel_cutoff = 8.0;

void set_threads(int n);
int thread_count();

/// out[g] = sum_i w[i] K_h(u_g - x[i]) / sum_i w[i], window |u_g - x_i| <= 8h.
void kde_grid(std::span<const double> x, std::span<const double> w, const Grid& grid,
              double h, std::span<double> out);
void kde_grid_serial(std::span<const double> x, std::span<const double> w, const Grid& grid,
                     double h, std::span<double> out);

/// Trapezoid-quadrature convolution at the grid nodes:
/// out[g] = sum_g' trap_g' K_h(u_g - u_g') in[g'] step, window |g - g'| <= 8h/step.
void convolve_grid(const Grid& grid, double h, std::span<const double> in,
                   std::span<double> out);
void convolve_grid_serial(const Grid& grid, double h, std::span<const double> in,
                          std::span<double> out);

/// The same quadrature evaluated at an arbitrary point y; `oob` is returned
/// when y lies outside [lo, hi].
double convolve_at(const Grid& grid, double h, std::span<const double> in, double y,
                   double oob);

/// Flat view of one grid-sampled function, for the score kernel below.
struct GridSpan {
  double lo;
  double hi;
  double step;
  int points;
  const double* values;
  double oob;
};

/// Mixture log-score table. data is n x d row-major; block_of_col[j] selects
/// the cell column; cells is an m x block_count row-major table of
/// log-density grids. out(i,k) = log_pi[k] + sum_j Q(cells[k][b_j], y_ij)
/// where Q is the convolve_at quadrature.
void log_score_table(const double* data, int n, int d, const int* block_of_col,
                     const GridSpan* cells, int m, int block_count, double bandwidth,
                     const double* log_pi, double* out);
void log_score_table_serial(const double* data, int n, int d, const int* block_of_col,
                            const GridSpan* cells, int m, int block_count, double bandwidth,
                            const double* log_pi, double* out);

}  // namespace npmix::kernels

#endif
