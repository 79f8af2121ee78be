#ifndef NPMIX_EVALVIZ_HPP
#define NPMIX_EVALVIZ_HPP

#include <span>
#include <string>
#include <vector>

#include "npmix/ingest.hpp"

namespace npmix {

/// A partition of named items. Only the equality structure of the labels
/// matters; they need not be dense.
struct Labeling {
  std::vector<std::string> ids;
  std::vector<int> labels;
};

struct AriResult {
  double value = 0.0;
  // Set when the chance-corrected denominator vanished (both partitions
  // trivial) and the 1-if-identical-else-0 convention was applied.
  bool degenerate = false;
};

/// Adjusted Rand index between two partitions of the same id set. Items are
/// aligned by id, not by row order.
AriResult adjusted_rand_index(const Labeling& a, const Labeling& b);

struct VizRow {
  int cluster;            // 1-based
  std::string condition;
  double lambda;          // share of total expression mass in (cluster, condition)
  double pi_hat;          // fitted mixing proportion of the cluster
  int gene_count;
};

struct VizTable {
  std::vector<VizRow> rows;
};

/// Cluster/condition mass table for proportional-bar displays: lambda is the
/// expression mass of a cluster within a condition divided by the grand
/// total, summed over replicates. Requires data on the nonnegative
/// (pre-log) scale.
VizTable viz_table(const ExpressionMatrix& prelog, std::span<const int> labels,
                   std::span<const double> pi);

}  // namespace npmix

#endif
