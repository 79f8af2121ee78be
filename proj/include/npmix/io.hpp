#ifndef NPMIX_IO_HPP
#define NPMIX_IO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "npmix/evalviz.hpp"
#include "npmix/gaussmix.hpp"
#include "npmix/ingest.hpp"
#include "npmix/npmsl.hpp"

namespace npmix {

// Delimited writers emit tab-separated text with one header row; doubles are
// printed with shortest round-trip formatting, so write-then-read is
// value-exact. Readers auto-detect tab vs comma from the first line.

void write_counts(const CountsMatrix& m, const std::string& path);

void write_expression(const ExpressionMatrix& m, const std::string& path);
ExpressionMatrix read_expression(const std::string& path, const ConditionLayout& layout);

/// One `step.<i> = <step>` line per provenance entry, in application order.
void write_provenance(const std::vector<std::string>& provenance, const std::string& path);

/// Two columns (abscissa, density) preceded by `# lo=.. hi=.. G=.. h=..`.
void write_grid_density(const GridDensity& f, Bandwidth h, const std::string& path);

void write_labels(const std::vector<std::string>& ids, const std::vector<int>& labels,
                  const std::string& path);
Labeling read_labeling(const std::string& path);

void write_posterior(const std::vector<std::string>& ids, const Matrix<double>& w,
                     const std::string& path);
void write_pi(const std::vector<double>& pi, const std::string& path);
std::vector<double> read_pi(const std::string& path);
void write_trace(const FitTrace& trace, const std::string& path);

/// labels, posterior, pi, per-cell density files, and the iteration trace,
/// all under `dir`.
void write_clustering_result(const ClusteringResult& result,
                             const std::vector<std::string>& ids, const std::string& dir);

/// One row per candidate count plus a trailing `# chosen_m=...` summary line
/// with the vote map.
void write_selection_report(const SelectionReport& report, const std::string& path);
int read_chosen_m(const std::string& path);

void write_viz_table(const VizTable& table, const std::string& path);
void write_viz_json(const VizTable& table, const std::string& path);

/// FNV-1a over a canonical config string; recorded in the run manifest.
std::uint64_t fnv1a(const std::string& text);

struct ManifestEntry {
  std::string key;
  std::string value;
};
void write_manifest(const std::vector<ManifestEntry>& entries, const std::string& path);

}  // namespace npmix

#endif
