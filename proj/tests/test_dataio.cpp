#include "doctest.h"

#include "eftc/dataio.hpp"
#include "eftc/error.hpp"
#include "eftc/simgen.hpp"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <limits>
#include <random>

#include <unistd.h>

using namespace eftc;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected eftc::Error");
  return ErrorCode::IoError;
}

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("eftc_dataio_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  fs::path operator/(const std::string& name) const { return path / name; }
};

const fs::path kData = EFTC_TEST_DATA_DIR;

}  // namespace

TEST_CASE("single-row file") {
  TempDir dir;
  write_text_file(dir / "one.txt", "1 0.0 0.5 1.0\n");
  const CurveSet cs = load_ucr(dir / "one.txt");
  CHECK(cs.size() == 1);
  CHECK(cs.length() == 3);
  CHECK(cs.labels == std::vector<int>{0});
  CHECK(cs.n_classes == 1);
  CHECK(cs.time_grid == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(cs.values(0, 1) == 0.5);
}

TEST_CASE("delimiters and label remapping") {
  TempDir dir;
  write_text_file(dir / "c.csv", "5,1,2\r\n-1,3,4\r\n\r\n5,5,6\r\n2.5,7,8\r\n");
  const CurveSet cs = load_ucr(dir / "c.csv");
  CHECK(cs.class_values == std::vector<double>{-1.0, 2.5, 5.0});
  CHECK(cs.labels == std::vector<int>{2, 0, 2, 1});
  CHECK(cs.values(3, 1) == 8.0);

  write_text_file(dir / "t.tsv", "2\t1e-3\t+2\n1\t3\t4\n");
  const CurveSet ct = load_ucr(dir / "t.tsv", parse_delimiter("tab"));
  CHECK(ct.labels == std::vector<int>{1, 0});
  CHECK(ct.values(0, 0) == 1e-3);
  CHECK(ct.values(0, 1) == 2.0);

  write_text_file(dir / "w.txt", "  2   1.5\t 3\n1 4 5  \n");
  CHECK(load_ucr(dir / "w.txt", Delimiter::Whitespace).values(0, 1) == 3.0);
  CHECK(code_of([] { parse_delimiter("semicolon"); }) == ErrorCode::InvalidParam);
}

TEST_CASE("test labels go through the training mapping") {
  TempDir dir;
  write_text_file(dir / "train.txt", "3 1 2\n7 1 2\n");
  write_text_file(dir / "test.txt", "7 0 0\n3 1 1\n");
  write_text_file(dir / "bad.txt", "4 0 0\n");
  const CurveSet train = load_ucr(dir / "train.txt");
  const LabelEncoder enc = encoder_of(train);
  CHECK(load_ucr(dir / "test.txt", Delimiter::Auto, &enc).labels == std::vector<int>{1, 0});
  CHECK(code_of([&] { load_ucr(dir / "bad.txt", Delimiter::Auto, &enc); }) == ErrorCode::LabelMismatch);
}

TEST_CASE("malformed files") {
  TempDir dir;
  write_text_file(dir / "ragged.txt", "1 2 3\n1 2\n");
  CHECK(code_of([&] { load_ucr(dir / "ragged.txt"); }) == ErrorCode::RaggedFile);
  write_text_file(dir / "word.txt", "1 2 x3\n");
  CHECK(code_of([&] { load_ucr(dir / "word.txt"); }) == ErrorCode::ParseError);
  write_text_file(dir / "nan.txt", "1 2 nan\n");
  CHECK(code_of([&] { load_ucr(dir / "nan.txt"); }) == ErrorCode::ParseError);
  write_text_file(dir / "empty.txt", "\n\n");
  CHECK(code_of([&] { load_ucr(dir / "empty.txt"); }) == ErrorCode::EmptyInput);
  CHECK(code_of([&] { load_ucr(dir / "missing.txt"); }) == ErrorCode::IoError);
}

TEST_CASE("dataset write then read is exact") {
  TempDir dir;
  auto sets = generate_scenario(scenario_spec(4, 3));
  save_ucr(dir / "s4.tsv", sets.train);
  const CurveSet back = load_ucr(dir / "s4.tsv");
  CHECK(back.values == sets.train.values);
  CHECK(back.labels == sets.train.labels);
  CHECK(back.class_values == sets.train.class_values);
  CHECK(back.time_grid == sets.train.time_grid);
  // load -> save -> load is a fixed point, byte for byte
  save_ucr(dir / "again.tsv", back);
  CHECK(read_text_file(dir / "again.tsv") == read_text_file(dir / "s4.tsv"));
}

TEST_CASE("shortest round-trip number formatting") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::uint64_t> bits;
  for (int rep = 0; rep < 2000; ++rep) {
    double v;
    do {
      const std::uint64_t b = bits(rng);
      std::memcpy(&v, &b, sizeof v);
    } while (!std::isfinite(v));
    const std::string s = format_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(2.0) == "2");
}

TEST_CASE("archive manifests") {
  const auto names = known_dataset_names();
  CHECK(names.size() == 7);
  CHECK(!known_dataset("Nope").has_value());
  const auto plane = known_dataset("Plane");
  REQUIRE(plane.has_value());
  CHECK(plane->n_classes == 7);
  CHECK(plane->length == 144);
  const auto car = known_dataset("Car");
  REQUIRE(car.has_value());
  CHECK(car->train_n == 60);
  CHECK(car->test_n == 60);
  CHECK(car->length == 577);
  CHECK(car->n_classes == 4);

  const auto ipd = known_dataset("ItalyPowerDemand", kData);
  REQUIRE(ipd.has_value());
  const CurveSet train = load_ucr(ipd->train_path);
  const LabelEncoder enc = encoder_of(train);
  const CurveSet test = load_ucr(ipd->test_path, Delimiter::Auto, &enc);
  CHECK(validate_manifest(*ipd, train, test).empty());

  // a truncated copy is flagged, not rejected
  CurveSet shorter = train;
  shorter.values = train.values.leftCols(20);
  shorter.time_grid.resize(20);
  const auto issues = validate_manifest(*ipd, shorter, test);
  REQUIRE(issues.size() == 1);
  CHECK(issues[0].find("train length") != std::string::npos);
}

TEST_CASE("matrix files") {
  TempDir dir;
  auto sets = generate_scenario(scenario_spec(1, 2));
  EnrichmentOptions opt;
  opt.blocks = {Block::Orig, Block::Curv, Block::Elast};
  const EnrichedMatrix m = build_enriched(sets.train, opt);
  save_matrix(dir / "m.csv", m);
  const std::string header = read_text_file(dir / "m.csv").substr(0, 20);
  CHECK(header.rfind("label,ORIG_1,ORIG_2,", 0) == 0);
  const EnrichedMatrix back = load_matrix(dir / "m.csv");
  CHECK(back.features == m.features);
  CHECK(back.labels == m.labels);
  CHECK(back.layout == m.layout);
  CHECK(back.n_classes == 2);
  save_matrix(dir / "again.csv", back);
  CHECK(read_text_file(dir / "again.csv") == read_text_file(dir / "m.csv"));

  EnrichedMatrix bad = m;
  bad.features(3, 4) = std::numeric_limits<double>::quiet_NaN();
  CHECK(code_of([&] { save_matrix(dir / "bad.csv", bad); }) == ErrorCode::NonFiniteInput);
  bad.features(3, 4) = std::numeric_limits<double>::infinity();
  CHECK(code_of([&] { save_matrix(dir / "bad.csv", bad); }) == ErrorCode::NonFiniteInput);

  write_text_file(dir / "ragged.csv", "label,ORIG_1,ORIG_2\n0,1,2\n1,3\n");
  CHECK(code_of([&] { load_matrix(dir / "ragged.csv"); }) == ErrorCode::RaggedFile);
  write_text_file(dir / "order.csv", "label,ORIG_2,ORIG_1\n0,1,2\n");
  CHECK(code_of([&] { load_matrix(dir / "order.csv"); }) == ErrorCode::ParseError);
}

TEST_CASE("model files predict identically") {
  TempDir dir;
  std::mt19937_64 rng(9);
  std::normal_distribution<double> N;
  Matrix X(80, 6);
  std::vector<int> y;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index k = 0; k < X.cols(); ++k) X(i, k) = N(rng);
    y.push_back(X(i, 0) + 0.5 * X(i, 3) > 0 ? 1 : (X(i, 2) > 0.8 ? 2 : 0));
  }
  Matrix probe(100, 6);
  for (Eigen::Index i = 0; i < probe.rows(); ++i)
    for (Eigen::Index k = 0; k < probe.cols(); ++k) probe(i, k) = N(rng);
  for (Method m : kAllMethods) {
    const Classifier model = train_classifier(m, {}, X, y, 3, 4);
    const fs::path p = dir / (std::string(method_name(m)) + ".json");
    save_model(p, model);
    const Classifier back = load_model(p);
    CHECK(back.predict_all(probe) == model.predict_all(probe));
    for (Eigen::Index i = 0; i < 10; ++i) CHECK(back.predict_proba(probe.row(i)) == model.predict_proba(probe.row(i)));
    save_model(dir / "again.json", back);
    CHECK(read_text_file(dir / "again.json") == read_text_file(p));
  }
  write_text_file(dir / "junk.json", "{not json");
  CHECK(code_of([&] { load_model(dir / "junk.json"); }) == ErrorCode::ParseError);
}

TEST_CASE("run records") {
  TempDir dir;
  save_runs(dir / "empty.csv", {});
  CHECK(load_runs(dir / "empty.csv").empty());

  RunRecord a{"scenario3", "FOREST", true, 4, 0xfedcba9876543210ull, {{"max_depth", 7}, {"note", "a,\"b\""}}, 0.875, 0.0};
  RunRecord b{"Car, v2", "KNN", false, 0, 1, {{"k", 3}}, 1.0 / 3.0, 1.25};
  save_runs(dir / "runs.csv", {a, b});
  const auto back = load_runs(dir / "runs.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[0] == a);
  CHECK(back[1] == b);
  CHECK(runs_to_csv(back) == read_text_file(dir / "runs.csv"));

  RunRecord bad = a;
  bad.accuracy = std::numeric_limits<double>::quiet_NaN();
  CHECK(code_of([&] { runs_to_csv({bad}); }) == ErrorCode::InvalidParam);
  write_text_file(dir / "noheader.csv", "x,y\n");
  CHECK(code_of([&] { load_runs(dir / "noheader.csv"); }) == ErrorCode::ParseError);
}

TEST_CASE("csv field quoting") {
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(split_csv_line("a,\"b,c\",\"d\"\"e\",") == std::vector<std::string>{"a", "b,c", "d\"e", ""});
  CHECK(code_of([] { split_csv_line("\"open"); }) == ErrorCode::ParseError);
}
