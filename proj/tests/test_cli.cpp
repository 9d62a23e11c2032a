#include "doctest.h"

#include "eftc/dataio.hpp"

#include <cstdlib>
#include <filesystem>
#include <random>

#include <sys/wait.h>

using namespace eftc;
namespace fs = std::filesystem;

namespace {

struct Workdir {
  fs::path path = fs::temp_directory_path() / ("eftc_cli_" + std::to_string(std::random_device{}()));
  Workdir() { fs::create_directories(path); }
  ~Workdir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

// Runs the CLI with stdout captured into `out`; returns the exit status.
int run_cli(const std::string& args, const std::string& out = "/dev/null") {
  const std::string cmd = std::string("\"") + EFTC_CLI + "\" " + args + " > \"" + out + "\" 2>/dev/null";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("simulate writes the published scenario sizes") {
  Workdir w;
  REQUIRE(run_cli("simulate --scenario 4 --seed 1 --out " + w.path.string()) == 0);
  const CurveSet train = load_ucr(w / "scenario4_TRAIN.tsv");
  const CurveSet test = load_ucr(w / "scenario4_TEST.tsv");
  CHECK(train.size() == 200);
  CHECK(test.size() == 200);
  CHECK(train.n_classes == 4);
  CHECK(train.length() == 50);
}

TEST_CASE("enrich, train and evaluate") {
  Workdir w;
  REQUIRE(run_cli("simulate --scenario 1 --seed 2 --out " + w.path.string()) == 0);
  REQUIRE(run_cli("enrich --in " + (w / "scenario1_TRAIN.tsv") + " --blocks ORIG,D1 --out " + (w / "train.csv")) == 0);
  REQUIRE(run_cli("enrich --in " + (w / "scenario1_TEST.tsv") + " --train " + (w / "scenario1_TRAIN.tsv") +
               " --blocks ORIG,D1 --out " + (w / "test.csv")) == 0);
  const EnrichedMatrix m = load_matrix(w / "train.csv");
  CHECK(m.features.cols() == 2 * 52);
  // an unlimited tree fits its own training rows perfectly
  REQUIRE(run_cli("train --matrix " + (w / "train.csv") + " --method TREE --params '{\"max_depth\": -1}' --model-out " +
               (w / "tree.json")) == 0);
  REQUIRE(run_cli("evaluate --model " + (w / "tree.json") + " --matrix " + (w / "train.csv"), w / "acc.txt") == 0);
  CHECK(read_text_file(w / "acc.txt") == "1.0\n");
  REQUIRE(run_cli("evaluate --model " + (w / "tree.json") + " --matrix " + (w / "test.csv"), w / "acc2.txt") == 0);
  const double acc = std::stod(read_text_file(w / "acc2.txt"));
  CHECK(acc > 0.5);
  CHECK(acc <= 1.0);

  REQUIRE(run_cli("explain sep-curve --model " + (w / "tree.json") + " --matrix " + (w / "train.csv") + " --node 0 --out " +
               (w / "curve.csv")) == 0);
  CHECK(read_text_file(w / "curve.csv").rfind("t,block,value\n", 0) == 0);
  REQUIRE(run_cli("explain importance --matrix " + (w / "train.csv") + " --feature 5 --policy same-spline --repetitions 3 --out " +
               (w / "imp.csv")) == 0);
  CHECK(read_text_file(w / "imp.csv").find("\n5,SAME_SPLINE,,57,") != std::string::npos);
}

TEST_CASE("bench output parses back") {
  Workdir w;
  write_text_file(w / "cfg.json", R"({"repetitions": 2, "n_trees": 10, "rounds": 5, "master_seed": 3})");
  REQUIRE(run_cli("--threads 2 bench --config " + (w / "cfg.json") + " --data scenario5 --out " + (w / "runs.csv"),
               w / "summary.txt") == 0);
  const auto runs = load_runs(w / "runs.csv");
  CHECK(runs.size() == 5 * 2 * 2);
  for (const auto& r : runs) {
    CHECK(r.dataset == "scenario5");
    CHECK(r.accuracy >= 0.0);
    CHECK(r.accuracy <= 1.0);
  }
  CHECK(read_text_file(w / "summary.txt").find("BOOST_LEAF   ENRICHED     2") != std::string::npos);
}

TEST_CASE("exit codes") {
  Workdir w;
  CHECK(run_cli("simulate --scenario 7 --out " + w.path.string()) == 2);
  CHECK(run_cli("evaluate --model " + (w / "missing.json") + " --matrix " + (w / "missing.csv")) == 1);
  CHECK(run_cli("train --matrix x.csv") == 2);
  CHECK(run_cli("no-such-command") == 2);
  CHECK(run_cli("--help") == 0);
  write_text_file(w / "ragged.tsv", "1\t2\t3\n1\t2\n");
  CHECK(run_cli("enrich --in " + (w / "ragged.tsv") + " --out " + (w / "m.csv")) == 2);
}
