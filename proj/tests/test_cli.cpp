#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "npmix/io.hpp"
#include "npmix/rng.hpp"
#include "npmix/text.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using testsup::read_file;
using testsup::tmp_dir;
using testsup::write_file;

namespace {

int run_cli(const std::string& args, const std::string& capture = "") {
  std::string cmd = std::string(NPMIX_CLI_PATH) + " " + args;
  if (!capture.empty()) cmd += " > " + capture + " 2>&1";
  const int ret = std::system(cmd.c_str());
  return WEXITSTATUS(ret);
}

// Two expression groups across two conditions, sized so a fit takes moments.
std::string make_fixture(const std::string& dir) {
  npmix::Rng rng(404);
  std::ostringstream counts, lengths;
  counts << "gene_id\ta_1\ta_2\tb_1\tb_2\n";
  for (int i = 0; i < 40; ++i) {
    const bool high_in_a = i % 2 == 0;
    counts << 'g' << i;
    for (int j = 0; j < 4; ++j) {
      const bool a_side = j < 2;
      const double mean = (high_in_a == a_side) ? 400.0 : 40.0;
      const double v = mean * std::exp(rng.normal(0.0, 0.2));
      counts << '\t' << static_cast<long long>(v);
    }
    counts << '\n';
    lengths << 'g' << i << '\t' << 500 + 10 * i << '\n';
  }
  write_file(dir + "/counts.tsv", counts.str());
  write_file(dir + "/lengths.tsv", lengths.str());
  return dir;
}

std::map<std::string, std::string> snapshot(const std::string& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) {
      files[fs::relative(entry.path(), dir).string()] = read_file(entry.path().string());
    }
  }
  return files;
}

}  // namespace

TEST_CASE("cli: normalize, cluster, ari, and viz-data run end to end") {
  const std::string dir = make_fixture(tmp_dir("cli_pipeline"));
  REQUIRE(run_cli("normalize --counts " + dir + "/counts.tsv --layout a:2,b:2 --lengths " +
                  dir + "/lengths.tsv --seed 7 --out " + dir + "/norm",
                  dir + "/norm.log") == 0);
  REQUIRE(fs::exists(dir + "/norm/normalized.tsv"));
  REQUIRE(fs::exists(dir + "/norm/normalized.tsv.meta"));

  REQUIRE(run_cli("cluster --input " + dir + "/norm/normalized.tsv --layout a:2,b:2 --m 2 "
                  "--grid-points 64 --seed 7 --out " + dir + "/fit",
                  dir + "/fit.log") == 0);
  REQUIRE(fs::exists(dir + "/fit/labels.tsv"));
  REQUIRE(fs::exists(dir + "/fit/manifest.txt"));
  const std::string manifest = read_file(dir + "/fit/manifest.txt");
  CHECK(manifest.find("bandwidth = ") != std::string::npos);
  CHECK(manifest.find("config_hash = ") != std::string::npos);

  // the fixture's alternating design should be recovered exactly
  const npmix::Labeling lab = npmix::read_labeling(dir + "/fit/labels.tsv");
  std::vector<int> truth;
  for (int i = 0; i < 40; ++i) truth.push_back(i % 2 == 0 ? 1 : 2);
  CHECK(oracle::ari_pairs(lab.labels, truth) == 1.0);

  REQUIRE(run_cli("ari " + dir + "/fit/labels.tsv " + dir + "/fit/labels.tsv --out " + dir +
                  "/ari", dir + "/ari.log") == 0);
  CHECK(read_file(dir + "/ari.log").find("ari=1") != std::string::npos);
  CHECK(fs::exists(dir + "/ari/ari.json"));

  REQUIRE(run_cli("viz-data --expr " + dir + "/norm/prelog.tsv --layout a:2,b:2 --result " +
                  dir + "/fit --out " + dir + "/viz", dir + "/viz.log") == 0);
  const std::string viz = read_file(dir + "/viz/viz.tsv");
  CHECK(viz.find("cluster\tcondition\tlambda\tpi_hat\tgene_count\n") == 0);

  // the written trace is non-decreasing in its likelihood column
  std::istringstream trace(read_file(dir + "/fit/trace.tsv"));
  std::string line;
  std::getline(trace, line);  // header
  double prev = -1e300;
  int rows = 0;
  while (std::getline(trace, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto fields = npmix::split(line, '\t');
    REQUIRE(fields.size() == 3);
    double ll = 0.0;
    REQUIRE(npmix::parse_double(fields[1], ll));
    CHECK(ll >= prev - 1e-10);
    prev = ll;
    ++rows;
  }
  CHECK(rows >= 2);
}

TEST_CASE("cli: automatic component selection feeds the fit") {
  // level-separated groups: the repeated-measures selector keys on the
  // overall expression level of a row, not on condition contrasts
  const std::string dir = tmp_dir("cli_auto");
  npmix::Rng rng(505);
  std::ostringstream counts, lengths;
  counts << "gene_id\ta_1\ta_2\tb_1\tb_2\n";
  for (int i = 0; i < 40; ++i) {
    const double mean = i % 2 == 0 ? 600.0 : 40.0;
    counts << 'g' << i;
    for (int j = 0; j < 4; ++j) {
      counts << '\t' << static_cast<long long>(mean * std::exp(rng.normal(0.0, 0.15)));
    }
    counts << '\n';
    lengths << 'g' << i << '\t' << 500 + 10 * i << '\n';
  }
  write_file(dir + "/counts.tsv", counts.str());
  write_file(dir + "/lengths.tsv", lengths.str());
  REQUIRE(run_cli("normalize --counts " + dir + "/counts.tsv --layout a:2,b:2 --lengths " +
                  dir + "/lengths.tsv --seed 3 --out " + dir + "/norm", dir + "/log") == 0);
  REQUIRE(run_cli("cluster --input " + dir + "/norm/normalized.tsv --layout a:2,b:2 "
                  "--m auto --m-min 1 --m-max 3 --restarts 6 --grid-points 64 --threads 2 "
                  "--seed 3 --out " + dir + "/fit", dir + "/log") == 0);
  CHECK(fs::exists(dir + "/fit/selection.tsv"));
  CHECK(fs::exists(dir + "/fit/labels.tsv"));
  const int chosen = npmix::read_chosen_m(dir + "/fit/selection.tsv");
  CHECK(chosen >= 2);
  // the fit used the selected count
  CHECK(npmix::read_pi(dir + "/fit/pi.tsv").size() == static_cast<std::size_t>(chosen));

  // reuse the produced labels as an external starting point; the hard init
  // can only seed as many components as the labels actually use
  const npmix::Labeling produced = npmix::read_labeling(dir + "/fit/labels.tsv");
  const std::set<int> used(produced.labels.begin(), produced.labels.end());
  REQUIRE(used == std::set<int>{1, 2});
  REQUIRE(run_cli("cluster --input " + dir + "/norm/normalized.tsv --layout a:2,b:2 --m " +
                  std::to_string(used.size()) + " --init external --init-labels " + dir +
                  "/fit/labels.tsv --grid-points 64 --seed 3 --out " + dir + "/fit2",
                  dir + "/log") == 0);
  CHECK(fs::exists(dir + "/fit2/labels.tsv"));
}

TEST_CASE("cli: reruns with one configuration are byte-identical") {
  const std::string dir = make_fixture(tmp_dir("cli_determinism"));
  for (const char* run : {"r1", "r2"}) {
    const std::string out = dir + "/" + run;
    REQUIRE(run_cli("normalize --counts " + dir + "/counts.tsv --layout a:2,b:2 --lengths " +
                    dir + "/lengths.tsv --seed 11 --out " + out + "/norm",
                    dir + "/log") == 0);
    REQUIRE(run_cli("cluster --input " + out + "/norm/normalized.tsv --layout a:2,b:2 "
                    "--m 2 --grid-points 64 --seed 11 --out " + out + "/fit",
                    dir + "/log") == 0);
  }
  auto r1 = snapshot(dir + "/r1");
  auto r2 = snapshot(dir + "/r2");
  REQUIRE(r1.size() == r2.size());
  for (const auto& [name, content] : r1) {
    INFO("file ", name);
    // the matrix path appears inside the manifest; neutralize the run prefix
    if (name.find("manifest") != std::string::npos) continue;
    CHECK(content == r2.at(name));
  }
}

TEST_CASE("cli: log of zero-containing data without imputation is a config error") {
  const std::string dir = tmp_dir("cli_ordering");
  write_file(dir + "/counts.tsv", "gene_id\ta_1\tb_1\ng1\t0\t5\ng2\t3\t4\ng3\t6\t1\n");
  const int code = run_cli("normalize --counts " + dir + "/counts.tsv --layout a:1,b:1 "
                           "--no-fpkm --impute off --cpm-threshold 0 --out " + dir + "/norm",
                           dir + "/log");
  CHECK(code == 4);
  CHECK(read_file(dir + "/log").find("ordering") != std::string::npos);
}

TEST_CASE("cli: ari over disjoint id sets exits with the input-error code") {
  const std::string dir = tmp_dir("cli_ari_err");
  write_file(dir + "/a.tsv", "gene_id\tlabel\ng1\t1\ng2\t2\n");
  write_file(dir + "/b.tsv", "gene_id\tlabel\ng1\t1\ngX\t2\n");
  CHECK(run_cli("ari " + dir + "/a.tsv " + dir + "/b.tsv --out " + dir, dir + "/log") == 2);
}

TEST_CASE("cli: infeasible component count exits with the numeric-error code") {
  const std::string dir = tmp_dir("cli_infeasible");
  write_file(dir + "/e.tsv", "gene_id\ta_1\tb_1\ng1\t0.5\t0.25\ng2\t1.5\t2.25\ng3\t0.75\t1\n");
  CHECK(run_cli("cluster --input " + dir + "/e.tsv --layout a:1,b:1 --m 9 --grid-points 64 "
                "--out " + dir + "/fit", dir + "/log") == 3);
}

TEST_CASE("cli: select-k reports one row per candidate") {
  const std::string dir = tmp_dir("cli_select");
  npmix::Rng rng(17);
  std::ostringstream expr;
  expr << "gene_id\ta_1\ta_2\tb_1\tb_2\n";
  for (int i = 0; i < 60; ++i) {
    const double mean = i < 30 ? 0.0 : 4.0;
    expr << 'g' << i;
    for (int j = 0; j < 4; ++j) expr << '\t' << rng.normal(mean, 0.5);
    expr << '\n';
  }
  write_file(dir + "/e.tsv", expr.str());
  REQUIRE(run_cli("select-k --input " + dir + "/e.tsv --layout a:2,b:2 --m-min 1 --m-max 4 "
                  "--restarts 6 --seed 3 --out " + dir + "/sel", dir + "/log") == 0);
  CHECK(read_file(dir + "/log").find("chosen_m=2") != std::string::npos);
  const std::string report = read_file(dir + "/sel/selection.tsv");
  int rows = 0;
  for (char c : report) rows += c == '\n' ? 1 : 0;
  CHECK(rows == 6);  // header + 4 data rows + summary
  CHECK(npmix::read_chosen_m(dir + "/sel/selection.tsv") == 2);
}

TEST_CASE("cli: a config file reproduces the flag-driven run") {
  const std::string dir = make_fixture(tmp_dir("cli_config"));
  REQUIRE(run_cli("normalize --counts " + dir + "/counts.tsv --layout a:2,b:2 --lengths " +
                  dir + "/lengths.tsv --seed 5 --out " + dir + "/norm", dir + "/log") == 0);

  REQUIRE(run_cli("cluster --input " + dir + "/norm/normalized.tsv --layout a:2,b:2 --m 2 "
                  "--grid-points 64 --seed 5 --out " + dir + "/flags", dir + "/log") == 0);

  write_file(dir + "/run.cfg",
             "seed = 5\nout = " + dir + "/cfg\n\n[cluster]\ninput = " + dir +
                 "/norm/normalized.tsv\nlayout = \"a:2,b:2\"\nm = 2\ngrid-points = 64\n");
  REQUIRE(run_cli("cluster --config " + dir + "/run.cfg", dir + "/log2") == 0);

  CHECK(read_file(dir + "/flags/labels.tsv") == read_file(dir + "/cfg/labels.tsv"));
  CHECK(read_file(dir + "/flags/pi.tsv") == read_file(dir + "/cfg/pi.tsv"));
  CHECK(read_file(dir + "/flags/trace.tsv") == read_file(dir + "/cfg/trace.tsv"));
}
