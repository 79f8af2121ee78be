#include <doctest.h>

#include <filesystem>

#include "npmix/io.hpp"
#include "npmix/rng.hpp"
#include "test_support.hpp"

using namespace npmix;
using testsup::read_file;
using testsup::tmp_dir;

TEST_CASE("labels round-trip and tolerate a header") {
  const std::string dir = tmp_dir("io_labels");
  write_labels({"gA", "gB", "gC"}, {2, 1, 2}, dir + "/labels.tsv");
  const Labeling lab = read_labeling(dir + "/labels.tsv");
  CHECK(lab.ids == std::vector<std::string>{"gA", "gB", "gC"});
  CHECK(lab.labels == std::vector<int>{2, 1, 2});
}

TEST_CASE("pi vector round-trips") {
  const std::string dir = tmp_dir("io_pi");
  const std::vector<double> pi{0.125, 0.375, 0.5};
  write_pi(pi, dir + "/pi.tsv");
  CHECK(read_pi(dir + "/pi.tsv") == pi);
}

TEST_CASE("grid density file carries the grid metadata") {
  const std::string dir = tmp_dir("io_density");
  const Grid grid(-1.0, 1.0, 65);
  GridDensity f{grid, std::vector<double>(65, 0.5)};
  write_grid_density(f, Bandwidth{0.25}, dir + "/density.tsv");
  const std::string body = read_file(dir + "/density.tsv");
  CHECK(body.find("# lo=-1 hi=1 G=65 h=0.25") == 0);
  CHECK(body.find("\n-1\t0.5\n") != std::string::npos);
}

TEST_CASE("trace file records a status line") {
  const std::string dir = tmp_dir("io_trace");
  FitTrace trace;
  trace.records.push_back({0, -10.5, 0.0});
  trace.records.push_back({1, -9.25, 0.125});
  trace.status = FitTrace::Status::converged;
  write_trace(trace, dir + "/trace.tsv");
  const std::string body = read_file(dir + "/trace.tsv");
  CHECK(body.find("iteration\tsmoothed_loglik\tmax_dpi\n") == 0);
  CHECK(body.find("1\t-9.25\t0.125\n") != std::string::npos);
  CHECK(body.find("# status=converged") != std::string::npos);
}

TEST_CASE("selection report writes one row per m and a parsable summary") {
  const std::string dir = tmp_dir("io_selection");
  SelectionReport report;
  for (int m = 1; m <= 3; ++m) {
    SelectionRow row{};
    row.m = m;
    row.loglik = -100.0 - m;
    row.p_free = 3 * m - 1;
    row.crit = {1.0, 2.0, 3.0, 4.0};
    row.converged = true;
    row.seed = 42;
    report.rows.push_back(row);
  }
  report.chosen_m = 2;
  report.majority = true;
  report.votes = {{"AIC", 2}, {"BIC", 2}, {"CAIC", 3}, {"ICL", 2}};
  write_selection_report(report, dir + "/selection.tsv");
  CHECK(read_chosen_m(dir + "/selection.tsv") == 2);
  const std::string body = read_file(dir + "/selection.tsv");
  CHECK(body.find("BIC->2") != std::string::npos);
}

TEST_CASE("provenance sidecar lists steps in order") {
  const std::string dir = tmp_dir("io_provenance");
  write_provenance({"cpm_filter(threshold=1.5)", "fpkm", "log_transform"}, dir + "/m.meta");
  const std::string body = read_file(dir + "/m.meta");
  CHECK(body == "step.1 = cpm_filter(threshold=1.5)\nstep.2 = fpkm\nstep.3 = log_transform\n");
}

TEST_CASE("clustering result directory holds every artifact") {
  namespace fs = std::filesystem;
  const std::string dir = tmp_dir("io_result");
  const auto synth = testsup::gauss_mixture(25, 2, {0.0, 2.0}, {1.0, 1.0}, {0.5, 0.5}, 3);
  FitConfig config;
  config.grid_points = 64;
  config.max_iters = 10;
  config.seed = 1;
  const ClusteringResult result = fit(synth.data, 2, BlockSpec::singleton(2), config);
  std::vector<std::string> ids;
  for (int i = 0; i < 25; ++i) ids.push_back("g" + std::to_string(i));
  write_clustering_result(result, ids, dir);

  for (const char* name : {"labels.tsv", "posterior.tsv", "pi.tsv", "trace.tsv",
                           "density_k1_b1.tsv", "density_k2_b2.tsv"}) {
    CHECK(fs::exists(fs::path(dir) / name));
  }
  const Labeling lab = read_labeling(dir + "/labels.tsv");
  CHECK(lab.labels == result.labels);
}
