#include "npmix/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "npmix/rng.hpp"
#include "npmix/text.hpp"

namespace npmix {

ConditionLayout parse_layout(const std::string& text) {
  ConditionLayout layout;
  for (const auto& part : split(text, ',')) {
    const auto pos = part.find(':');
    std::int64_t reps = 0;
    if (pos == std::string::npos || !parse_int64(part.substr(pos + 1), reps) || reps < 1 ||
        pos == 0) {
      throw Error(errc::layout, "bad layout entry '" + part + "' (want name:replicates)");
    }
    layout.conditions.emplace_back(part.substr(0, pos), static_cast<int>(reps));
  }
  if (layout.conditions.empty()) {
    throw Error(errc::layout, "layout is empty");
  }
  return layout;
}

namespace {

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::io, "cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) lines.push_back(line);
  }
  return lines;
}

std::unordered_map<std::string, std::int64_t> read_lengths_file(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw Error(errc::parse, "lengths file '" + path + "': no data rows");
  const char delim = detect_delim(lines[0]);
  std::unordered_map<std::string, std::int64_t> lengths;
  for (std::size_t r = 0; r < lines.size(); ++r) {
    const auto fields = split(lines[r], delim);
    std::int64_t len = 0;
    if (fields.size() != 2 || !parse_int64(fields[1], len)) {
      if (r == 0) continue;  // header line
      throw Error(errc::parse,
                  "lengths file '" + path + "': bad row " + std::to_string(r + 1));
    }
    if (len <= 0) {
      throw Error(errc::parse, "lengths file '" + path + "': nonpositive length for '" +
                                   fields[0] + "'");
    }
    lengths[fields[0]] = len;
  }
  return lengths;
}

}  // namespace

CountsMatrix read_counts(const std::string& path, const ConditionLayout& layout,
                         const std::optional<std::string>& lengths_path) {
  const auto lines = read_lines(path);
  if (lines.size() < 2) throw Error(errc::parse, "'" + path + "': no data rows");
  const char delim = detect_delim(lines[0]);
  const auto header = split(lines[0], delim);
  if (header.size() < 2) throw Error(errc::parse, "'" + path + "': header has no samples");
  const std::size_t d = header.size() - 1;
  if (layout.total_columns() != static_cast<int>(d)) {
    throw Error(errc::layout, "layout covers " + std::to_string(layout.total_columns()) +
                                  " columns but '" + path + "' has " + std::to_string(d));
  }

  CountsMatrix out;
  out.layout = layout;
  out.counts = Matrix<std::int64_t>(lines.size() - 1, d);
  out.gene_ids.reserve(lines.size() - 1);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = split(lines[r], delim);
    if (fields.size() != header.size()) {
      throw Error(errc::parse, "'" + path + "': row " + std::to_string(r + 1) + " has " +
                                   std::to_string(fields.size()) + " fields, expected " +
                                   std::to_string(header.size()));
    }
    out.gene_ids.push_back(fields[0]);
    for (std::size_t j = 0; j < d; ++j) {
      std::int64_t v = 0;
      if (!parse_int64(fields[j + 1], v) || v < 0) {
        throw Error(errc::parse, "'" + path + "': cell at row " + std::to_string(r + 1) +
                                     ", column " + std::to_string(j + 2) +
                                     " is not a nonnegative integer: '" + fields[j + 1] + "'");
      }
      out.counts(r - 1, j) = v;
    }
  }

  out.totals.assign(d, 0);
  for (std::size_t i = 0; i < out.counts.rows(); ++i) {
    for (std::size_t j = 0; j < d; ++j) out.totals[j] += out.counts(i, j);
  }

  if (lengths_path) {
    const auto table = read_lengths_file(*lengths_path);
    std::vector<std::int64_t> lengths;
    lengths.reserve(out.gene_ids.size());
    for (const auto& id : out.gene_ids) {
      const auto it = table.find(id);
      if (it == table.end()) {
        throw Error(errc::missing_key, "no length for gene '" + id + "'");
      }
      lengths.push_back(it->second);
    }
    out.gene_lengths = std::move(lengths);
  }
  return out;
}

namespace {

void require_positive_totals(const CountsMatrix& counts) {
  for (std::size_t j = 0; j < counts.totals.size(); ++j) {
    if (counts.totals[j] <= 0) {
      throw Error(errc::degenerate_data,
                  "sample column " + std::to_string(j + 1) + " has zero total count");
    }
  }
}

// Multiply before dividing so exact decimal cases stay exact.
inline double cpm_value(std::int64_t count, std::int64_t total) {
  return static_cast<double>(count) * 1e6 / static_cast<double>(total);
}

}  // namespace

ExpressionMatrix cpm(const CountsMatrix& counts) {
  require_positive_totals(counts);
  ExpressionMatrix out;
  out.gene_ids = counts.gene_ids;
  out.layout = counts.layout;
  out.provenance = counts.provenance;
  out.values = Matrix<double>(counts.counts.rows(), counts.counts.cols());
  for (std::size_t i = 0; i < counts.counts.rows(); ++i) {
    for (std::size_t j = 0; j < counts.counts.cols(); ++j) {
      out.values(i, j) = cpm_value(counts.counts(i, j), counts.totals[j]);
    }
  }
  out.provenance.push_back("cpm");
  return out;
}

CountsMatrix cpm_filter(const CountsMatrix& counts, double threshold, CpmPolicy policy) {
  if (!(threshold > 0.0)) throw Error(errc::config, "cpm threshold must be positive");
  require_positive_totals(counts);
  const std::size_t d = counts.counts.cols();
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < counts.counts.rows(); ++i) {
    bool retained = false;
    switch (policy) {
      case CpmPolicy::any_sample: {
        for (std::size_t j = 0; j < d && !retained; ++j) {
          retained = cpm_value(counts.counts(i, j), counts.totals[j]) >= threshold;
        }
        break;
      }
      case CpmPolicy::all_samples: {
        retained = true;
        for (std::size_t j = 0; j < d && retained; ++j) {
          retained = cpm_value(counts.counts(i, j), counts.totals[j]) >= threshold;
        }
        break;
      }
      case CpmPolicy::mean: {
        double sum = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          sum += cpm_value(counts.counts(i, j), counts.totals[j]);
        }
        retained = sum / static_cast<double>(d) >= threshold;
        break;
      }
    }
    if (retained) keep.push_back(i);
  }

  CountsMatrix out;
  out.layout = counts.layout;
  out.totals = counts.totals;  // library sizes are a property of the samples
  out.provenance = counts.provenance;
  out.provenance.push_back("cpm_filter(threshold=" + format_double(threshold) + ")");
  out.counts = Matrix<std::int64_t>(keep.size(), d);
  out.gene_ids.reserve(keep.size());
  if (counts.gene_lengths) out.gene_lengths.emplace();
  for (std::size_t r = 0; r < keep.size(); ++r) {
    out.gene_ids.push_back(counts.gene_ids[keep[r]]);
    if (counts.gene_lengths) out.gene_lengths->push_back((*counts.gene_lengths)[keep[r]]);
    for (std::size_t j = 0; j < d; ++j) out.counts(r, j) = counts.counts(keep[r], j);
  }
  return out;
}

ExpressionMatrix fpkm(const CountsMatrix& counts) {
  if (!counts.gene_lengths) {
    throw Error(errc::missing_key, "fpkm requires gene lengths");
  }
  require_positive_totals(counts);
  ExpressionMatrix out;
  out.gene_ids = counts.gene_ids;
  out.layout = counts.layout;
  out.provenance = counts.provenance;
  out.values = Matrix<double>(counts.counts.rows(), counts.counts.cols());
  for (std::size_t i = 0; i < counts.counts.rows(); ++i) {
    const double denom_i = static_cast<double>((*counts.gene_lengths)[i]);
    for (std::size_t j = 0; j < counts.counts.cols(); ++j) {
      out.values(i, j) = static_cast<double>(counts.counts(i, j)) * 1e9 /
                         (static_cast<double>(counts.totals[j]) * denom_i);
    }
  }
  out.provenance.push_back("fpkm");
  return out;
}

ExpressionMatrix to_expression(const CountsMatrix& counts) {
  ExpressionMatrix out;
  out.gene_ids = counts.gene_ids;
  out.layout = counts.layout;
  out.provenance = counts.provenance;
  out.values = Matrix<double>(counts.counts.rows(), counts.counts.cols());
  for (std::size_t i = 0; i < counts.counts.rows(); ++i) {
    for (std::size_t j = 0; j < counts.counts.cols(); ++j) {
      out.values(i, j) = static_cast<double>(counts.counts(i, j));
    }
  }
  out.provenance.push_back("identity");
  return out;
}

ExpressionMatrix zero_impute(const ExpressionMatrix& m, std::uint64_t seed) {
  double smallest = 0.0;
  bool found = false;
  for (double v : m.values.data()) {
    if (v > 0.0 && (!found || v < smallest)) {
      smallest = v;
      found = true;
    }
  }
  if (!found) {
    throw Error(errc::degenerate_data, "matrix has no positive entry to bound imputation");
  }
  ExpressionMatrix out = m;
  Rng rng(seed);
  for (double& v : out.values.data()) {
    if (v == 0.0) v = rng.uniform_left_open(smallest);
  }
  out.provenance.push_back("zero_impute(seed=" + std::to_string(seed) +
                           ", a=" + format_double(smallest) + ")");
  return out;
}

ExpressionMatrix log_transform(const ExpressionMatrix& m) {
  for (std::size_t i = 0; i < m.values.rows(); ++i) {
    for (std::size_t j = 0; j < m.values.cols(); ++j) {
      if (!(m.values(i, j) > 0.0)) {
        throw Error(errc::scale, "log transform needs positive values; gene '" +
                                     m.gene_ids[i] + "', column " + std::to_string(j + 1) +
                                     " is " + format_double(m.values(i, j)));
      }
    }
  }
  ExpressionMatrix out = m;
  for (double& v : out.values.data()) v = std::log(v);
  out.provenance.push_back("log_transform");
  return out;
}

}  // namespace npmix
