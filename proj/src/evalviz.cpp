#include "npmix/evalviz.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "npmix/error.hpp"
#include "npmix/text.hpp"

namespace npmix {

namespace {

double comb2(double x) { return 0.5 * x * (x - 1.0); }

std::unordered_map<std::string, int> index_by_id(const Labeling& lab) {
  if (lab.ids.size() != lab.labels.size()) {
    throw Error(errc::alignment, "labeling has mismatched id and label counts");
  }
  std::unordered_map<std::string, int> out;
  out.reserve(lab.ids.size());
  for (std::size_t i = 0; i < lab.ids.size(); ++i) {
    if (!out.emplace(lab.ids[i], lab.labels[i]).second) {
      throw Error(errc::alignment, "duplicate id '" + lab.ids[i] + "' in labeling");
    }
  }
  return out;
}

}  // namespace

AriResult adjusted_rand_index(const Labeling& a, const Labeling& b) {
  const auto bx = index_by_id(b);
  const auto ax = index_by_id(a);
  std::string missing;
  for (const auto& kv : ax) {
    if (!bx.count(kv.first)) {
      missing += missing.empty() ? kv.first : ", " + kv.first;
      if (missing.size() > 200) break;
    }
  }
  for (const auto& kv : bx) {
    if (!ax.count(kv.first)) {
      missing += missing.empty() ? kv.first : ", " + kv.first;
      if (missing.size() > 200) break;
    }
  }
  if (!missing.empty()) {
    throw Error(errc::alignment, "labelings cover different ids: " + missing);
  }

  // Contingency table over aligned items.
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> row_sum, col_sum;
  for (const auto& [id, la] : ax) {
    const int lb = bx.at(id);
    joint[{la, lb}] += 1.0;
    row_sum[la] += 1.0;
    col_sum[lb] += 1.0;
  }

  const double n = static_cast<double>(ax.size());
  double sum_joint = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& kv : joint) sum_joint += comb2(kv.second);
  for (const auto& kv : row_sum) sum_a += comb2(kv.second);
  for (const auto& kv : col_sum) sum_b += comb2(kv.second);
  const double total_pairs = comb2(n);

  AriResult out;
  if (total_pairs <= 0.0) {
    out.value = 1.0;
    out.degenerate = true;
    return out;
  }
  const double expected = (sum_a * sum_b) / total_pairs;
  const double maximum = 0.5 * (sum_a + sum_b);
  if (maximum == expected) {
    // Both partitions trivial: the chance correction is 0/0. Identical
    // partitions score 1, anything else 0.
    bool identical = joint.size() == row_sum.size() && joint.size() == col_sum.size();
    out.value = identical ? 1.0 : 0.0;
    out.degenerate = true;
    return out;
  }
  out.value = (sum_joint - expected) / (maximum - expected);
  return out;
}

VizTable viz_table(const ExpressionMatrix& prelog, std::span<const int> labels,
                   std::span<const double> pi) {
  const std::size_t n = prelog.values.rows();
  const std::size_t d = prelog.values.cols();
  if (labels.size() != n) {
    throw Error(errc::alignment, "labels do not cover every gene");
  }
  if (prelog.layout.total_columns() != static_cast<int>(d)) {
    throw Error(errc::layout, "layout does not match the matrix");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if (prelog.values(i, j) < 0.0) {
        throw Error(errc::scale, "negative value at gene '" + prelog.gene_ids[i] +
                                     "': the mass table needs pre-log data");
      }
    }
  }
  const int m = static_cast<int>(pi.size());
  for (int lab : labels) {
    if (lab < 1 || lab > m) {
      throw Error(errc::alignment, "label " + std::to_string(lab) +
                                       " outside 1.." + std::to_string(m));
    }
  }

  const std::size_t n_cond = prelog.layout.conditions.size();
  // mass(k, j): total expression of cluster k in condition j over replicates.
  Matrix<double> mass(m, n_cond, 0.0);
  std::vector<int> gene_count(m, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const int k = labels[i] - 1;
    ++gene_count[k];
    std::size_t col = 0;
    for (std::size_t j = 0; j < n_cond; ++j) {
      const int reps = prelog.layout.conditions[j].second;
      for (int q = 0; q < reps; ++q, ++col) {
        mass(k, j) += prelog.values(i, col);
      }
    }
  }
  double grand = 0.0;
  for (double v : mass.data()) grand += v;
  if (!(grand > 0.0)) {
    throw Error(errc::degenerate_data, "expression matrix has zero total mass");
  }

  VizTable table;
  table.rows.reserve(static_cast<std::size_t>(m) * n_cond);
  for (int k = 0; k < m; ++k) {
    for (std::size_t j = 0; j < n_cond; ++j) {
      table.rows.push_back({k + 1, prelog.layout.conditions[j].first, mass(k, j) / grand,
                            pi[k], gene_count[k]});
    }
  }
  return table;
}

}  // namespace npmix
