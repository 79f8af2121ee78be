// Timing harness for the OpenMP kernels against their serial references.
// Prints one row per kernel: serial ms, parallel ms, speedup, max |diff|.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "npmix/kde.hpp"
#include "npmix/kernels.hpp"
#include "npmix/matrix.hpp"
#include "npmix/npmsl.hpp"
#include "npmix/rng.hpp"

using namespace npmix;

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <typename F>
double time_ms(F&& body, int reps) {
  // one warmup, then best of reps
  body();
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const double t0 = now_ms();
    body();
    best = std::min(best, now_ms() - t0);
  }
  return best;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void row(const char* name, double serial_ms, double parallel_ms, double diff) {
  std::printf("%-18s %10.2f ms %10.2f ms %8.2fx %12.3g\n", name, serial_ms, parallel_ms,
              serial_ms / parallel_ms, diff);
}

}  // namespace

int main(int argc, char** argv) {
  const int n_points = argc > 1 ? std::atoi(argv[1]) : 20000;
  const int grid_points = argc > 2 ? std::atoi(argv[2]) : 512;
  const int reps = 3;

  std::printf("points=%d grid=%d threads=%d\n", n_points, grid_points,
              kernels::thread_count());
  std::printf("%-18s %13s %13s %9s %12s\n", "kernel", "serial", "parallel", "speedup",
              "max|diff|");

  Rng rng(1);
  const double h = 0.35;
  std::vector<double> pts(n_points), wts(n_points);
  for (int i = 0; i < n_points; ++i) {
    pts[i] = rng.normal(0.0, 1.5);
    wts[i] = rng.uniform01_open();
  }
  const Grid grid(-7.0, 7.0, grid_points);

  {
    std::vector<double> ser(grid_points), par(grid_points);
    const double ts = time_ms([&] { kernels::kde_grid_serial(pts, wts, grid, h, ser); }, reps);
    const double tp = time_ms([&] { kernels::kde_grid(pts, wts, grid, h, par); }, reps);
    row("kde_grid", ts, tp, max_abs_diff(ser, par));
  }

  {
    std::vector<double> in(grid_points), ser(grid_points), par(grid_points);
    for (double& v : in) v = -1.0 - rng.uniform01() * 20.0;
    const double ts =
        time_ms([&] { kernels::convolve_grid_serial(grid, h, in, ser); }, reps);
    const double tp = time_ms([&] { kernels::convolve_grid(grid, h, in, par); }, reps);
    row("convolve_grid", ts, tp, max_abs_diff(ser, par));
  }

  {
    // mixture score table: n rows x d coordinates x m components
    const int n = n_points / 4, d = 8, m = 5;
    Matrix<double> data(n, d);
    for (double& v : data.data()) v = rng.normal(0.0, 1.2);
    BlockSpec blocks = BlockSpec::singleton(d);
    std::vector<std::vector<double>> logf(m * d, std::vector<double>(grid_points));
    for (auto& cell : logf) {
      for (double& v : cell) v = -0.5 - 10.0 * rng.uniform01();
    }
    std::vector<kernels::GridSpan> cells;
    for (const auto& cell : logf) {
      cells.push_back(
          {grid.lo(), grid.hi(), grid.step(), grid.points(), cell.data(), -30.0});
    }
    std::vector<double> log_pi(m, std::log(1.0 / m));
    Matrix<double> ser(n, m), par(n, m);
    const double ts = time_ms(
        [&] {
          kernels::log_score_table_serial(data.data().data(), n, d,
                                          blocks.block_of_col.data(), cells.data(), m, d, h,
                                          log_pi.data(), ser.data().data());
        },
        reps);
    const double tp = time_ms(
        [&] {
          kernels::log_score_table(data.data().data(), n, d, blocks.block_of_col.data(),
                                   cells.data(), m, d, h, log_pi.data(), par.data().data());
        },
        reps);
    row("log_score_table", ts, tp, max_abs_diff(ser.data(), par.data()));
  }

  return 0;
}
