#ifndef NPMIX_INGEST_HPP
#define NPMIX_INGEST_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "npmix/error.hpp"
#include "npmix/matrix.hpp"

namespace npmix {

/// Experimental design: ordered conditions, each with a replicate count.
/// Columns of a matrix are grouped condition-by-condition in this order.
struct ConditionLayout {
  std::vector<std::pair<std::string, int>> conditions;

  int total_columns() const {
    int d = 0;
    for (const auto& [name, reps] : conditions) d += reps;
    return d;
  }
};

/// Parse a layout description of the form "liver:2,kidney:3".
ConditionLayout parse_layout(const std::string& text);

/// Raw read counts, genes x samples. `totals` holds the per-sample library
/// size: recomputed from the columns at read time, and deliberately carried
/// through gene filtering unchanged (filtering must not renormalize).
struct CountsMatrix {
  std::vector<std::string> gene_ids;
  Matrix<std::int64_t> counts;
  std::optional<std::vector<std::int64_t>> gene_lengths;
  ConditionLayout layout;
  std::vector<std::int64_t> totals;
  std::vector<std::string> provenance;
};

/// A real-valued expression matrix plus the ordered list of processing steps
/// that produced it.
struct ExpressionMatrix {
  std::vector<std::string> gene_ids;
  Matrix<double> values;
  ConditionLayout layout;
  std::vector<std::string> provenance;
};

/// Which samples a gene's CPM must reach the threshold in to be retained.
enum class CpmPolicy { any_sample, all_samples, mean };

/// Read a delimited count matrix: header row of sample names, first column of
/// gene ids. Tab-delimited if the header contains a tab, comma otherwise.
/// The optional lengths file is two-column (gene id, length in bases) and
/// must cover every gene.
CountsMatrix read_counts(const std::string& path, const ConditionLayout& layout,
                         const std::optional<std::string>& lengths_path = std::nullopt);

/// Counts per million: value = counts * 1e6 / library size.
ExpressionMatrix cpm(const CountsMatrix& counts);

/// Drop genes whose CPM fails the retention rule at `threshold`. Library
/// sizes are kept from the input so downstream normalization is unchanged.
CountsMatrix cpm_filter(const CountsMatrix& counts, double threshold,
                        CpmPolicy policy = CpmPolicy::any_sample);

/// Fragments per kilobase per million mapped reads:
/// value = counts * 1e9 / (library size * gene length).
ExpressionMatrix fpkm(const CountsMatrix& counts);

/// Counts reinterpreted as expression values with no normalization.
ExpressionMatrix to_expression(const CountsMatrix& counts);

/// Replace every zero with an independent draw from (0, A], where A is the
/// smallest strictly positive entry of the whole matrix. Nonzero entries are
/// untouched. Deterministic for a given seed.
ExpressionMatrix zero_impute(const ExpressionMatrix& m, std::uint64_t seed);

/// Natural log of every entry; requires a strictly positive matrix.
ExpressionMatrix log_transform(const ExpressionMatrix& m);

}  // namespace npmix

#endif
