#include <doctest.h>

#include <cmath>

#include "npmix/kernels.hpp"
#include "npmix/rng.hpp"
#include "test_support.hpp"

using namespace npmix;
using testsup::close_abs;

namespace {

struct Problem {
  std::vector<double> pts;
  std::vector<double> wts;
  Grid grid;
  double h;
};

Problem make_problem(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  Problem p{std::vector<double>(n), std::vector<double>(n), Grid(-5.0, 5.0, 256), 0.35};
  for (std::size_t i = 0; i < n; ++i) {
    p.pts[i] = rng.normal(0.0, 1.3);
    p.wts[i] = rng.uniform01_open();
  }
  return p;
}

}  // namespace

TEST_CASE("gaussian kernel: symmetric, unit mass by quadrature") {
  Rng rng(3);
  for (int rep = 0; rep < 100; ++rep) {
    const double u = rng.normal(0.0, 3.0);
    CHECK(kernels::gauss(u) == kernels::gauss(-u));
  }
  // trapezoid on [-10, 10]
  const int n = 4001;
  const double step = 20.0 / (n - 1);
  double mass = 0.0;
  for (int i = 0; i < n; ++i) {
    const double wgt = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    mass += wgt * kernels::gauss(-10.0 + step * i);
  }
  mass *= step;
  CHECK(close_abs(mass, 1.0, 1e-8));
}

TEST_CASE("kde_grid: parallel and serial paths are bit-identical") {
  const Problem p = make_problem(21, 300);
  std::vector<double> par(p.grid.points()), ser(p.grid.points());
  kernels::kde_grid(p.pts, p.wts, p.grid, p.h, par);
  kernels::kde_grid_serial(p.pts, p.wts, p.grid, p.h, ser);
  for (int g = 0; g < p.grid.points(); ++g) CHECK(par[g] == ser[g]);
}

TEST_CASE("convolve_grid: parallel and serial paths are bit-identical") {
  const Problem p = make_problem(22, 150);
  std::vector<double> in(p.grid.points()), par(p.grid.points()), ser(p.grid.points());
  Rng rng(7);
  for (double& v : in) v = std::log(rng.uniform01_open());
  kernels::convolve_grid(p.grid, p.h, in, par);
  kernels::convolve_grid_serial(p.grid, p.h, in, ser);
  for (int g = 0; g < p.grid.points(); ++g) CHECK(par[g] == ser[g]);
}

TEST_CASE("log_score_table: parallel and serial paths are bit-identical") {
  Rng rng(23);
  const int n = 64, d = 3, m = 2, L = 2;
  Matrix<double> data(n, d);
  for (double& v : data.data()) v = rng.normal(0.0, 1.0);
  const std::vector<int> block_of_col{0, 1, 1};
  const Grid grid(-4.0, 4.0, 128);
  std::vector<std::vector<double>> grids(m * L, std::vector<double>(grid.points()));
  for (auto& vals : grids) {
    for (double& v : vals) v = -1.0 + rng.uniform01();
  }
  std::vector<kernels::GridSpan> cells;
  for (const auto& vals : grids) {
    cells.push_back({grid.lo(), grid.hi(), grid.step(), grid.points(), vals.data(), -30.0});
  }
  const std::vector<double> log_pi{std::log(0.3), std::log(0.7)};
  Matrix<double> par(n, m), ser(n, m);
  kernels::log_score_table(data.data().data(), n, d, block_of_col.data(), cells.data(), m, L,
                           0.5, log_pi.data(), par.data().data());
  kernels::log_score_table_serial(data.data().data(), n, d, block_of_col.data(), cells.data(),
                                  m, L, 0.5, log_pi.data(), ser.data().data());
  CHECK(par.data() == ser.data());
}

TEST_CASE("results do not depend on the thread count") {
  const int before = kernels::thread_count();
  const Problem p = make_problem(24, 200);
  std::vector<double> one(p.grid.points()), four(p.grid.points());
  kernels::set_threads(1);
  kernels::kde_grid(p.pts, p.wts, p.grid, p.h, one);
  kernels::set_threads(4);
  kernels::kde_grid(p.pts, p.wts, p.grid, p.h, four);
  kernels::set_threads(before);
  for (int g = 0; g < p.grid.points(); ++g) CHECK(one[g] == four[g]);
}

TEST_CASE("convolve_at at a node agrees with the node convolution") {
  const Grid grid(-3.0, 3.0, 192);
  std::vector<double> in(grid.points());
  Rng rng(31);
  for (double& v : in) v = rng.uniform01();
  const double h = 0.4;
  std::vector<double> nodes(grid.points());
  kernels::convolve_grid(grid, h, in, nodes);
  for (int g = 0; g < grid.points(); g += 17) {
    CHECK(close_abs(kernels::convolve_at(grid, h, in, grid.at(g), -1.0), nodes[g], 1e-10));
  }
}

TEST_CASE("convolve_at returns the out-of-band value beyond the grid") {
  const Grid grid(0.0, 1.0, 64);
  std::vector<double> in(grid.points(), 2.0);
  CHECK(kernels::convolve_at(grid, 0.1, in, -0.2, -9.0) == -9.0);
  CHECK(kernels::convolve_at(grid, 0.1, in, 1.2, -9.0) == -9.0);
}
