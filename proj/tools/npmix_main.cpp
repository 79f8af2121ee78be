// Command-line front end: normalize -> select-k -> cluster -> ari -> viz-data.
// Every randomized step draws its seed from the master seed and its step
// name, so reruns of the same configuration are byte-identical.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>

#include <CLI11.hpp>
#include <json.hpp>

#include "npmix/error.hpp"
#include "npmix/evalviz.hpp"
#include "npmix/gaussmix.hpp"
#include "npmix/io.hpp"
#include "npmix/kernels.hpp"
#include "npmix/npmsl.hpp"
#include "npmix/rng.hpp"
#include "npmix/text.hpp"

namespace fs = std::filesystem;
using namespace npmix;

namespace {

struct GlobalOpts {
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out = ".";
};

std::string at(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

void finish_manifest(std::vector<ManifestEntry>& entries, const std::string& command,
                     const std::string& config_text, const GlobalOpts& g) {
  entries.insert(entries.begin(),
                 {{"tool", "npmix"},
                  {"version", NPMIX_VERSION},
                  {"command", command},
                  {"config_hash", hex64(fnv1a(command + "\n" + config_text))},
                  {"master_seed", std::to_string(g.seed)}});
}

// ---------------------------------------------------------------------------
// normalize

struct NormalizeOpts {
  std::string counts_path;
  std::string layout_text;
  std::string lengths_path;
  double cpm_threshold = 1.5;
  std::string cpm_policy = "any";
  bool use_fpkm = true;
  bool use_log = true;
  std::string impute = "auto";  // auto | on | off
};

CpmPolicy parse_policy(const std::string& name) {
  if (name == "any") return CpmPolicy::any_sample;
  if (name == "all") return CpmPolicy::all_samples;
  if (name == "mean") return CpmPolicy::mean;
  throw Error(errc::config, "unknown cpm policy '" + name + "'");
}

std::string describe(const NormalizeOpts& o) {
  std::ostringstream os;
  os << "counts=" << o.counts_path << " layout=" << o.layout_text
     << " lengths=" << o.lengths_path << " cpm_threshold=" << format_double(o.cpm_threshold)
     << " cpm_policy=" << o.cpm_policy << " fpkm=" << o.use_fpkm << " log=" << o.use_log
     << " impute=" << o.impute;
  return os.str();
}

int run_normalize(const NormalizeOpts& o, const GlobalOpts& g) {
  const ConditionLayout layout = parse_layout(o.layout_text);
  std::optional<std::string> lengths;
  if (!o.lengths_path.empty()) lengths = o.lengths_path;
  if (o.use_fpkm && !lengths) {
    throw Error(errc::config, "fpkm normalization needs --lengths (or pass --no-fpkm)");
  }

  CountsMatrix counts = read_counts(o.counts_path, layout, lengths);
  if (o.cpm_threshold > 0.0) {
    counts = cpm_filter(counts, o.cpm_threshold, parse_policy(o.cpm_policy));
  }
  ExpressionMatrix expr = o.use_fpkm ? fpkm(counts) : to_expression(counts);

  bool has_zero = false;
  for (double v : expr.values.data()) {
    if (v == 0.0) has_zero = true;
  }
  const bool impute = o.impute == "on" || (o.impute == "auto" && o.use_log && has_zero);
  if (o.impute != "on" && o.impute != "off" && o.impute != "auto") {
    throw Error(errc::config, "impute must be one of auto, on, off");
  }
  if (o.use_log && has_zero && !impute) {
    throw Error(errc::config,
                "ordering error: log transform of zero-containing data requires "
                "imputation first (use --impute auto or on)");
  }

  fs::create_directories(g.out);
  const std::uint64_t impute_seed = derive_seed(g.seed, "impute");
  if (o.use_log) {
    write_expression(expr, at(g.out, "prelog.tsv"));
    write_provenance(expr.provenance, at(g.out, "prelog.tsv.meta"));
  }
  if (impute) expr = zero_impute(expr, impute_seed);
  if (o.use_log) expr = log_transform(expr);
  write_expression(expr, at(g.out, "normalized.tsv"));
  write_provenance(expr.provenance, at(g.out, "normalized.tsv.meta"));

  std::vector<ManifestEntry> manifest;
  finish_manifest(manifest, "normalize", describe(o), g);
  manifest.push_back({"genes_retained", std::to_string(expr.gene_ids.size())});
  manifest.push_back({"impute_applied", impute ? "1" : "0"});
  if (impute) manifest.push_back({"impute_seed", std::to_string(impute_seed)});
  write_manifest(manifest, at(g.out, "manifest.txt"));
  std::cout << "normalized " << expr.gene_ids.size() << " genes -> "
            << at(g.out, "normalized.tsv") << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// select-k

struct SelectOpts {
  std::string input;
  std::string layout_text;
  int m_lo = 1;
  int m_hi = 8;
  int restarts = 20;
  int max_iters = 1000;
  double tol = 1e-8;
};

std::string describe(const SelectOpts& o) {
  std::ostringstream os;
  os << "input=" << o.input << " layout=" << o.layout_text << " m_range=" << o.m_lo << ".."
     << o.m_hi << " restarts=" << o.restarts << " max_iters=" << o.max_iters
     << " tol=" << format_double(o.tol);
  return os.str();
}

int run_select(const SelectOpts& o, const GlobalOpts& g) {
  const ConditionLayout layout = parse_layout(o.layout_text);
  const ExpressionMatrix expr = read_expression(o.input, layout);
  const std::uint64_t seed = derive_seed(g.seed, "select-k");
  const SelectionReport report = select_component_count(
      expr.values, o.m_lo, o.m_hi, seed, o.restarts, {o.max_iters, o.tol});

  fs::create_directories(g.out);
  write_selection_report(report, at(g.out, "selection.tsv"));
  std::vector<ManifestEntry> manifest;
  finish_manifest(manifest, "select-k", describe(o), g);
  manifest.push_back({"selection_seed", std::to_string(seed)});
  manifest.push_back({"chosen_m", std::to_string(report.chosen_m)});
  manifest.push_back({"majority", report.majority ? "1" : "0"});
  write_manifest(manifest, at(g.out, "manifest.txt"));
  std::cout << "chosen_m=" << report.chosen_m << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// cluster

struct ClusterOpts {
  std::string input;
  std::string layout_text;
  std::string m_text = "auto";
  int m_lo = 1;
  int m_hi = 8;
  int restarts = 20;
  int grid_points = 512;
  int max_iters = 500;
  double tol = 1e-8;
  double floor_scale = 1e-30;
  double bandwidth = 0.0;
  std::string init = "kmeans";
  std::string init_labels_path;
  std::string blocks = "per-condition";
};

std::string describe(const ClusterOpts& o) {
  std::ostringstream os;
  os << "input=" << o.input << " layout=" << o.layout_text << " m=" << o.m_text
     << " m_range=" << o.m_lo << ".." << o.m_hi << " restarts=" << o.restarts
     << " G=" << o.grid_points << " max_iters=" << o.max_iters
     << " tol=" << format_double(o.tol) << " floor_scale=" << format_double(o.floor_scale)
     << " bandwidth=" << format_double(o.bandwidth) << " init=" << o.init
     << " init_labels=" << o.init_labels_path << " blocks=" << o.blocks;
  return os.str();
}

int run_cluster(const ClusterOpts& o, const GlobalOpts& g) {
  const ConditionLayout layout = parse_layout(o.layout_text);
  const ExpressionMatrix expr = read_expression(o.input, layout);
  fs::create_directories(g.out);

  int m = 0;
  if (o.m_text == "auto") {
    const std::uint64_t sel_seed = derive_seed(g.seed, "select-k");
    const SelectionReport report = select_component_count(expr.values, o.m_lo, o.m_hi,
                                                          sel_seed, o.restarts, {});
    write_selection_report(report, at(g.out, "selection.tsv"));
    m = report.chosen_m;
  } else {
    std::int64_t parsed = 0;
    if (!parse_int64(o.m_text, parsed) || parsed < 1) {
      throw Error(errc::config, "--m must be a positive integer or 'auto'");
    }
    m = static_cast<int>(parsed);
  }

  BlockSpec spec;
  if (o.blocks == "per-condition") {
    spec = BlockSpec::from_layout(layout);
  } else if (o.blocks == "singleton") {
    spec = BlockSpec::singleton(static_cast<int>(expr.values.cols()));
  } else {
    throw Error(errc::config, "--blocks must be per-condition or singleton");
  }

  FitConfig config;
  config.max_iters = o.max_iters;
  config.tol = o.tol;
  config.seed = derive_seed(g.seed, "cluster");
  config.grid_points = o.grid_points;
  config.floor_scale = o.floor_scale;
  config.bandwidth = o.bandwidth;
  if (o.init == "kmeans") {
    config.init = InitStrategy::kmeans_like;
  } else if (o.init == "random") {
    config.init = InitStrategy::random_posterior;
  } else if (o.init == "external") {
    config.init = InitStrategy::external_labels;
    const Labeling lab = read_labeling(o.init_labels_path);
    std::unordered_map<std::string, int> by_id;
    for (std::size_t i = 0; i < lab.ids.size(); ++i) by_id[lab.ids[i]] = lab.labels[i];
    config.external_labels.reserve(expr.gene_ids.size());
    for (const auto& id : expr.gene_ids) {
      const auto it = by_id.find(id);
      if (it == by_id.end()) {
        throw Error(errc::alignment, "no initial label for gene '" + id + "'");
      }
      config.external_labels.push_back(it->second);
    }
  } else {
    throw Error(errc::config, "--init must be kmeans, random, or external");
  }

  const ClusteringResult result = fit(expr.values, m, spec, config);
  write_clustering_result(result, expr.gene_ids, g.out);

  std::vector<ManifestEntry> manifest;
  finish_manifest(manifest, "cluster", describe(o), g);
  manifest.push_back({"m", std::to_string(m)});
  manifest.push_back({"fit_seed", std::to_string(config.seed)});
  manifest.push_back({"bandwidth", format_double(result.state.h.h)});
  manifest.push_back(
      {"status", result.trace.status == FitTrace::Status::converged ? "converged"
                                                                    : "max_iters"});
  manifest.push_back({"iterations",
                      std::to_string(result.trace.records.back().iteration)});
  manifest.push_back(
      {"loglik", format_double(result.trace.records.back().loglik)});
  write_manifest(manifest, at(g.out, "manifest.txt"));
  std::cout << "clustered " << expr.gene_ids.size() << " genes into " << m
            << " components (h=" << format_double(result.state.h.h) << ") -> " << g.out
            << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// ari

int run_ari(const std::string& path_a, const std::string& path_b, const GlobalOpts& g) {
  const Labeling a = read_labeling(path_a);
  const Labeling b = read_labeling(path_b);
  const AriResult r = adjusted_rand_index(a, b);
  std::cout << "ari=" << format_double(r.value) << '\n';
  fs::create_directories(g.out);
  nlohmann::json record{{"ari", r.value},
                        {"degenerate", r.degenerate},
                        {"n_items", a.ids.size()},
                        {"labels_a", path_a},
                        {"labels_b", path_b}};
  std::ofstream out(at(g.out, "ari.json"));
  if (!out) throw Error(errc::io, "cannot write ari.json");
  out << record.dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// viz-data

struct VizOpts {
  std::string expr_path;
  std::string layout_text;
  std::string result_dir;
};

int run_viz(const VizOpts& o, const GlobalOpts& g) {
  const ConditionLayout layout = parse_layout(o.layout_text);
  const ExpressionMatrix expr = read_expression(o.expr_path, layout);
  const Labeling lab = read_labeling(at(o.result_dir, "labels.tsv"));
  const std::vector<double> pi = read_pi(at(o.result_dir, "pi.tsv"));

  std::unordered_map<std::string, int> by_id;
  for (std::size_t i = 0; i < lab.ids.size(); ++i) by_id[lab.ids[i]] = lab.labels[i];
  std::vector<int> labels;
  labels.reserve(expr.gene_ids.size());
  for (const auto& id : expr.gene_ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw Error(errc::alignment, "no cluster label for gene '" + id + "'");
    }
    labels.push_back(it->second);
  }

  const VizTable table = viz_table(expr, labels, pi);
  fs::create_directories(g.out);
  write_viz_table(table, at(g.out, "viz.tsv"));
  write_viz_json(table, at(g.out, "viz.json"));
  std::vector<ManifestEntry> manifest;
  finish_manifest(manifest, "viz-data",
                  "expr=" + o.expr_path + " layout=" + o.layout_text +
                      " result=" + o.result_dir + " scale=pre-log",
                  g);
  write_manifest(manifest, at(g.out, "manifest.txt"));
  std::cout << "wrote " << at(g.out, "viz.tsv") << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nonparametric smoothed-likelihood mixture clustering for expression data"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config")->description(
      "configuration file: key = value lines, one [section] per subcommand");

  GlobalOpts g;
  app.add_option("--seed", g.seed, "master seed for every randomized step");
  app.add_option("--threads", g.threads, "cap on worker threads (0 = library default)");
  app.add_option("--out", g.out, "output directory");

  NormalizeOpts no;
  auto* norm = app.add_subcommand("normalize", "filter, normalize, and transform counts");
  norm->add_option("--counts", no.counts_path, "count matrix file")->required();
  norm->add_option("--layout", no.layout_text, "condition layout, e.g. liver:2,lung:2")
      ->required();
  norm->add_option("--lengths", no.lengths_path, "gene length file (id, bases)");
  norm->add_option("--cpm-threshold", no.cpm_threshold,
                   "CPM retention cutoff (0 disables filtering)");
  norm->add_option("--cpm-policy", no.cpm_policy, "retention rule: any, all, or mean");
  norm->add_flag("--fpkm,!--no-fpkm", no.use_fpkm, "length-normalize to FPKM");
  norm->add_flag("--log,!--no-log", no.use_log, "apply the natural-log transform");
  norm->add_option("--impute", no.impute, "zero imputation: auto, on, off");

  SelectOpts so;
  auto* sel = app.add_subcommand("select-k", "choose a cluster count by majority vote");
  sel->add_option("--input", so.input, "normalized matrix")->required();
  sel->add_option("--layout", so.layout_text, "condition layout")->required();
  sel->add_option("--m-min", so.m_lo, "smallest candidate count");
  sel->add_option("--m-max", so.m_hi, "largest candidate count");
  sel->add_option("--restarts", so.restarts, "short-burn initializations per count");
  sel->add_option("--max-iters", so.max_iters, "EM iteration cap");
  sel->add_option("--tol", so.tol, "relative log-likelihood tolerance");

  ClusterOpts co;
  auto* clu = app.add_subcommand("cluster", "fit the smoothed-likelihood mixture");
  clu->add_option("--input", co.input, "normalized matrix")->required();
  clu->add_option("--layout", co.layout_text, "condition layout")->required();
  clu->add_option("--m", co.m_text, "component count, or 'auto' to select first");
  clu->add_option("--m-min", co.m_lo, "selection range low end (with --m auto)");
  clu->add_option("--m-max", co.m_hi, "selection range high end (with --m auto)");
  clu->add_option("--restarts", co.restarts, "selection restarts (with --m auto)");
  clu->add_option("--grid-points", co.grid_points, "density grid resolution");
  clu->add_option("--max-iters", co.max_iters, "iteration cap");
  clu->add_option("--tol", co.tol, "relative smoothed log-likelihood tolerance");
  clu->add_option("--floor-scale", co.floor_scale,
                  "density clamp, as a fraction of each cell's peak");
  clu->add_option("--bandwidth", co.bandwidth, "kernel bandwidth (0 = rule of thumb)");
  clu->add_option("--init", co.init, "starting point: kmeans, random, or external");
  clu->add_option("--init-labels", co.init_labels_path, "labels file for --init external");
  clu->add_option("--blocks", co.blocks, "coordinate blocks: per-condition or singleton");

  std::string ari_a, ari_b;
  auto* ari = app.add_subcommand("ari", "adjusted Rand index between two labelings");
  ari->add_option("labels_a", ari_a, "first labels file")->required();
  ari->add_option("labels_b", ari_b, "second labels file")->required();

  VizOpts vo;
  auto* viz = app.add_subcommand("viz-data", "cluster/condition mass table for plotting");
  viz->add_option("--expr", vo.expr_path, "pre-log expression matrix")->required();
  viz->add_option("--layout", vo.layout_text, "condition layout")->required();
  viz->add_option("--result", vo.result_dir, "clustering output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 4;
  }

  if (g.threads > 0) kernels::set_threads(g.threads);

  try {
    if (norm->parsed()) return run_normalize(no, g);
    if (sel->parsed()) return run_select(so, g);
    if (clu->parsed()) return run_cluster(co, g);
    if (ari->parsed()) return run_ari(ari_a, ari_b, g);
    if (viz->parsed()) return run_viz(vo, g);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
