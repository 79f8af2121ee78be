#include <doctest.h>

#include <cmath>

#include "npmix/evalviz.hpp"
#include "npmix/rng.hpp"
#include "test_support.hpp"

using namespace npmix;
using testsup::close;
using testsup::close_abs;

namespace {

Labeling make_labeling(const std::vector<int>& labels) {
  Labeling lab;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    lab.ids.push_back("g" + std::to_string(i));
    lab.labels.push_back(labels[i]);
  }
  return lab;
}

}  // namespace

TEST_CASE("ari: identical and permuted labelings score one") {
  const Labeling a = make_labeling({1, 1, 2, 2});
  const Labeling b = make_labeling({2, 2, 1, 1});
  CHECK(adjusted_rand_index(a, a).value == 1.0);
  CHECK(adjusted_rand_index(a, b).value == 1.0);
}

TEST_CASE("ari: matches the exhaustive pair-counting oracle") {
  const std::vector<int> la{1, 1, 1, 2, 2, 2};
  const std::vector<int> lb{1, 1, 2, 2, 3, 3};
  const AriResult r = adjusted_rand_index(make_labeling(la), make_labeling(lb));
  CHECK(r.value == oracle::ari_pairs(la, lb));
}

TEST_CASE("ari: symmetric and invariant under relabeling") {
  Rng rng(71);
  for (int rep = 0; rep < 30; ++rep) {
    std::vector<int> la(9), lb(9);
    for (int i = 0; i < 9; ++i) {
      la[i] = static_cast<int>(rng.below(3)) + 1;
      lb[i] = static_cast<int>(rng.below(4)) + 1;
    }
    const Labeling a = make_labeling(la), b = make_labeling(lb);
    const double ab = adjusted_rand_index(a, b).value;
    CHECK(ab == adjusted_rand_index(b, a).value);

    std::vector<int> renamed(9);
    const int map[4] = {7, 5, 9, 2};
    for (int i = 0; i < 9; ++i) renamed[i] = map[lb[i] - 1];
    CHECK(ab == adjusted_rand_index(a, make_labeling(renamed)).value);
  }
}

TEST_CASE("ari: alignment is by id, not row order") {
  Labeling a = make_labeling({1, 1, 2, 2});
  Labeling b;
  b.ids = {"g3", "g2", "g0", "g1"};
  b.labels = {5, 5, 4, 4};  // same partition as a once aligned by id
  CHECK(adjusted_rand_index(a, b).value == 1.0);
}

TEST_CASE("ari: disjoint id sets raise an alignment error naming the gap") {
  Labeling a = make_labeling({1, 2});
  Labeling b = a;
  b.ids[1] = "other";
  CHECK_THROWS_WITH_AS(adjusted_rand_index(a, b), doctest::Contains("other"), Error);
}

TEST_CASE("ari: degenerate pairs follow the identical-or-zero convention") {
  const Labeling singletons = make_labeling({1, 2, 3, 4});
  const AriResult same = adjusted_rand_index(singletons, singletons);
  CHECK(same.value == 1.0);
  CHECK(same.degenerate);

  const Labeling lumped = make_labeling({1, 1, 1, 1});
  const AriResult both_trivial = adjusted_rand_index(lumped, lumped);
  CHECK(both_trivial.value == 1.0);
  CHECK(both_trivial.degenerate);

  const AriResult mixed = adjusted_rand_index(singletons, lumped);
  CHECK(mixed.value == 0.0);
}

TEST_CASE("ari: full partition enumeration up to n=5 matches the oracle") {
  for (int n = 2; n <= 5; ++n) {
    const auto partitions = oracle::all_partitions(n);
    for (const auto& pa : partitions) {
      for (const auto& pb : partitions) {
        const double got = adjusted_rand_index(make_labeling(pa), make_labeling(pb)).value;
        CHECK(got == oracle::ari_pairs(pa, pb));
      }
    }
  }
}

namespace {

ExpressionMatrix tiny_expr(const std::vector<std::vector<double>>& rows,
                           const std::string& layout_text) {
  ExpressionMatrix m;
  m.layout = parse_layout(layout_text);
  m.values = Matrix<double>(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    m.gene_ids.push_back("g" + std::to_string(i));
    for (std::size_t j = 0; j < rows[0].size(); ++j) m.values(i, j) = rows[i][j];
  }
  return m;
}

}  // namespace

TEST_CASE("viz_table: single cluster and condition carries all mass") {
  const ExpressionMatrix m = tiny_expr({{2.0, 3.0}}, "a:2");
  const std::vector<int> labels{1};
  const std::vector<double> pi{1.0};
  const VizTable t = viz_table(m, labels, pi);
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0].lambda == 1.0);
  CHECK(t.rows[0].gene_count == 1);
}

TEST_CASE("viz_table: equal-mass clusters split a condition evenly") {
  const ExpressionMatrix m = tiny_expr({{4.0}, {4.0}}, "a:1");
  const std::vector<int> labels{1, 2};
  const std::vector<double> pi{0.5, 0.5};
  const VizTable t = viz_table(m, labels, pi);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0].lambda == 0.5);
  CHECK(t.rows[1].lambda == 0.5);
}

TEST_CASE("viz_table: matches direct double-sum arithmetic") {
  // 3 genes, 2 conditions with 2 and 1 replicates
  const ExpressionMatrix m =
      tiny_expr({{1.0, 2.0, 3.0}, {4.0, 5.0, 6.0}, {7.0, 8.0, 9.0}}, "a:2,b:1");
  const std::vector<int> labels{1, 2, 1};
  const std::vector<double> pi{0.6, 0.4};
  const VizTable t = viz_table(m, labels, pi);
  const double grand = 45.0;
  REQUIRE(t.rows.size() == 4);
  CHECK(close(t.rows[0].lambda, (1.0 + 2.0 + 7.0 + 8.0) / grand, 1e-15));  // k=1, cond a
  CHECK(close(t.rows[1].lambda, (3.0 + 9.0) / grand, 1e-15));              // k=1, cond b
  CHECK(close(t.rows[2].lambda, (4.0 + 5.0) / grand, 1e-15));              // k=2, cond a
  CHECK(close(t.rows[3].lambda, 6.0 / grand, 1e-15));                      // k=2, cond b
  CHECK(t.rows[0].gene_count == 2);
  CHECK(t.rows[2].gene_count == 1);
  CHECK(t.rows[0].pi_hat == 0.6);
}

TEST_CASE("viz_table: mass conservation and scale invariance") {
  Rng rng(91);
  std::vector<std::vector<double>> rows(20, std::vector<double>(5));
  std::vector<int> labels(20);
  for (int i = 0; i < 20; ++i) {
    labels[i] = static_cast<int>(rng.below(3)) + 1;
    for (int j = 0; j < 5; ++j) rows[i][j] = std::exp(rng.normal(0.0, 1.0));
  }
  const ExpressionMatrix m = tiny_expr(rows, "a:2,b:3");
  const std::vector<double> pi{0.3, 0.3, 0.4};
  const VizTable t = viz_table(m, labels, pi);
  double sum = 0.0;
  for (const auto& r : t.rows) sum += r.lambda;
  CHECK(close_abs(sum, 1.0, 1e-10));

  auto scaled_rows = rows;
  for (auto& r : scaled_rows) {
    for (double& v : r) v *= 17.5;
  }
  const VizTable ts = viz_table(tiny_expr(scaled_rows, "a:2,b:3"), labels, pi);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    CHECK(close(t.rows[r].lambda, ts.rows[r].lambda, 1e-12));
  }
}

TEST_CASE("viz_table: negative input is a scale error") {
  const ExpressionMatrix m = tiny_expr({{1.0, -0.5}}, "a:2");
  const std::vector<int> labels{1};
  const std::vector<double> pi{1.0};
  CHECK_THROWS_WITH_AS(viz_table(m, labels, pi), doctest::Contains("pre-log"), Error);
}
