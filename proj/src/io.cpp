#include "npmix/io.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "npmix/text.hpp"

namespace npmix {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(errc::io, "cannot write '" + path + "'");
  return out;
}

void write_header(std::ofstream& out, const ConditionLayout& layout) {
  out << "gene_id";
  for (const auto& [name, reps] : layout.conditions) {
    for (int r = 1; r <= reps; ++r) out << '\t' << name << '_' << r;
  }
  out << '\n';
}

}  // namespace

void write_counts(const CountsMatrix& m, const std::string& path) {
  auto out = open_out(path);
  write_header(out, m.layout);
  for (std::size_t i = 0; i < m.counts.rows(); ++i) {
    out << m.gene_ids[i];
    for (std::size_t j = 0; j < m.counts.cols(); ++j) out << '\t' << m.counts(i, j);
    out << '\n';
  }
}

void write_expression(const ExpressionMatrix& m, const std::string& path) {
  auto out = open_out(path);
  write_header(out, m.layout);
  for (std::size_t i = 0; i < m.values.rows(); ++i) {
    out << m.gene_ids[i];
    for (std::size_t j = 0; j < m.values.cols(); ++j) {
      out << '\t' << format_double(m.values(i, j));
    }
    out << '\n';
  }
}

ExpressionMatrix read_expression(const std::string& path, const ConditionLayout& layout) {
  std::ifstream in(path);
  if (!in) throw Error(errc::io, "cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) lines.push_back(line);
  }
  if (lines.size() < 2) throw Error(errc::parse, "'" + path + "': no data rows");
  const char delim = detect_delim(lines[0]);
  const std::size_t d = split(lines[0], delim).size() - 1;
  if (layout.total_columns() != static_cast<int>(d)) {
    throw Error(errc::layout, "layout covers " + std::to_string(layout.total_columns()) +
                                  " columns but '" + path + "' has " + std::to_string(d));
  }
  ExpressionMatrix out;
  out.layout = layout;
  out.values = Matrix<double>(lines.size() - 1, d);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = split(lines[r], delim);
    if (fields.size() != d + 1) {
      throw Error(errc::parse, "'" + path + "': row " + std::to_string(r + 1) +
                                   " has the wrong field count");
    }
    out.gene_ids.push_back(fields[0]);
    for (std::size_t j = 0; j < d; ++j) {
      double v = 0.0;
      if (!parse_double(fields[j + 1], v)) {
        throw Error(errc::parse, "'" + path + "': bad number at row " +
                                     std::to_string(r + 1) + ", column " +
                                     std::to_string(j + 2));
      }
      out.values(r - 1, j) = v;
    }
  }
  return out;
}

void write_provenance(const std::vector<std::string>& provenance, const std::string& path) {
  auto out = open_out(path);
  for (std::size_t i = 0; i < provenance.size(); ++i) {
    out << "step." << (i + 1) << " = " << provenance[i] << '\n';
  }
}

void write_grid_density(const GridDensity& f, Bandwidth h, const std::string& path) {
  auto out = open_out(path);
  out << "# lo=" << format_double(f.grid.lo()) << " hi=" << format_double(f.grid.hi())
      << " G=" << f.grid.points() << " h=" << format_double(h.h) << '\n';
  for (int g = 0; g < f.grid.points(); ++g) {
    out << format_double(f.grid.at(g)) << '\t' << format_double(f.values[g]) << '\n';
  }
}

void write_labels(const std::vector<std::string>& ids, const std::vector<int>& labels,
                  const std::string& path) {
  auto out = open_out(path);
  out << "gene_id\tlabel\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << ids[i] << '\t' << labels[i] << '\n';
  }
}

Labeling read_labeling(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::io, "cannot open '" + path + "'");
  Labeling lab;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const char delim = detect_delim(line);
    const auto fields = split(line, delim);
    std::int64_t value = 0;
    if (fields.size() != 2 || !parse_int64(fields[1], value)) {
      if (lab.ids.empty() && row == 1) continue;  // header
      throw Error(errc::parse, "'" + path + "': bad label row " + std::to_string(row));
    }
    lab.ids.push_back(fields[0]);
    lab.labels.push_back(static_cast<int>(value));
  }
  if (lab.ids.empty()) throw Error(errc::parse, "'" + path + "': no data rows");
  return lab;
}

void write_posterior(const std::vector<std::string>& ids, const Matrix<double>& w,
                     const std::string& path) {
  auto out = open_out(path);
  out << "gene_id";
  for (std::size_t k = 1; k <= w.cols(); ++k) out << "\tw_" << k;
  out << '\n';
  for (std::size_t i = 0; i < w.rows(); ++i) {
    out << ids[i];
    for (std::size_t k = 0; k < w.cols(); ++k) out << '\t' << format_double(w(i, k));
    out << '\n';
  }
}

void write_pi(const std::vector<double>& pi, const std::string& path) {
  auto out = open_out(path);
  out << "component\tpi\n";
  for (std::size_t k = 0; k < pi.size(); ++k) {
    out << (k + 1) << '\t' << format_double(pi[k]) << '\n';
  }
}

std::vector<double> read_pi(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::io, "cannot open '" + path + "'");
  std::vector<double> pi;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split(line, detect_delim(line));
    double v = 0.0;
    if (fields.size() != 2 || !parse_double(fields[1], v)) {
      if (pi.empty() && row == 1) continue;  // header
      throw Error(errc::parse, "'" + path + "': bad row " + std::to_string(row));
    }
    pi.push_back(v);
  }
  if (pi.empty()) throw Error(errc::parse, "'" + path + "': no data rows");
  return pi;
}

void write_trace(const FitTrace& trace, const std::string& path) {
  auto out = open_out(path);
  out << "iteration\tsmoothed_loglik\tmax_dpi\n";
  for (const auto& rec : trace.records) {
    out << rec.iteration << '\t' << format_double(rec.loglik) << '\t'
        << format_double(rec.max_dpi) << '\n';
  }
  const char* status = trace.status == FitTrace::Status::converged   ? "converged"
                       : trace.status == FitTrace::Status::max_iters ? "max_iters"
                                                                     : "failed";
  out << "# status=" << status << '\n';
}

void write_clustering_result(const ClusteringResult& result,
                             const std::vector<std::string>& ids, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto at = [&dir](const std::string& name) {
    return (fs::path(dir) / name).string();
  };
  write_labels(ids, result.labels, at("labels.tsv"));
  write_posterior(ids, result.posterior.w, at("posterior.tsv"));
  write_pi(result.state.pi, at("pi.tsv"));
  write_trace(result.trace, at("trace.tsv"));
  for (int k = 0; k < result.state.m; ++k) {
    for (std::size_t l = 0; l < result.state.grids.size(); ++l) {
      write_grid_density(result.state.densities[k][l], result.state.h,
                         at("density_k" + std::to_string(k + 1) + "_b" +
                            std::to_string(l + 1) + ".tsv"));
    }
  }
}

void write_selection_report(const SelectionReport& report, const std::string& path) {
  auto out = open_out(path);
  out << "m\tloglik\tp\tAIC\tBIC\tCAIC\tICL\tconverged\tseed\n";
  for (const auto& row : report.rows) {
    out << row.m << '\t' << format_double(row.loglik) << '\t' << row.p_free << '\t'
        << format_double(row.crit.aic) << '\t' << format_double(row.crit.bic) << '\t'
        << format_double(row.crit.caic) << '\t' << format_double(row.crit.icl) << '\t'
        << (row.converged ? 1 : 0) << '\t' << row.seed << '\n';
  }
  out << "# chosen_m=" << report.chosen_m << " majority=" << (report.majority ? 1 : 0)
      << " votes:";
  for (const auto& [name, m] : report.votes) out << ' ' << name << "->" << m;
  out << '\n';
}

int read_chosen_m(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::io, "cannot open '" + path + "'");
  std::string line;
  while (std::getline(in, line)) {
    const auto pos = line.find("# chosen_m=");
    if (pos != std::string::npos) {
      std::int64_t m = 0;
      const auto rest = line.substr(pos + 11);
      const auto space = rest.find(' ');
      if (parse_int64(rest.substr(0, space), m)) return static_cast<int>(m);
    }
  }
  throw Error(errc::parse, "'" + path + "': no chosen_m summary line");
}

void write_viz_table(const VizTable& table, const std::string& path) {
  auto out = open_out(path);
  out << "cluster\tcondition\tlambda\tpi_hat\tgene_count\n";
  for (const auto& row : table.rows) {
    out << row.cluster << '\t' << row.condition << '\t' << format_double(row.lambda)
        << '\t' << format_double(row.pi_hat) << '\t' << row.gene_count << '\n';
  }
}

void write_viz_json(const VizTable& table, const std::string& path) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.rows) {
    rows.push_back({{"cluster", row.cluster},
                    {"condition", row.condition},
                    {"lambda", row.lambda},
                    {"pi_hat", row.pi_hat},
                    {"gene_count", row.gene_count}});
  }
  auto out = open_out(path);
  out << nlohmann::json{{"rows", rows}}.dump(2) << '\n';
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void write_manifest(const std::vector<ManifestEntry>& entries, const std::string& path) {
  auto out = open_out(path);
  for (const auto& e : entries) out << e.key << " = " << e.value << '\n';
}

}  // namespace npmix
