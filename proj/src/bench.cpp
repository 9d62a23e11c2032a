#include "eftc/bench.hpp"
#include "eftc/error.hpp"
#include "eftc/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace eftc {

using nlohmann::json;

std::string_view variant_name(Variant v) noexcept { return v == Variant::Original ? "ORIGINAL" : "ENRICHED"; }

Variant parse_variant(std::string_view name) {
  std::string s(name);
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (s == "ORIGINAL") return Variant::Original;
  if (s == "ENRICHED") return Variant::Enriched;
  throw Error(ErrorCode::InvalidParam, "unknown variant '" + std::string(name) + "'");
}

void SweepConfig::validate() const {
  EFTC_REQUIRE(repetitions >= 1, ErrorCode::InvalidParam, "repetitions must be >= 1");
  EFTC_REQUIRE(!methods.empty() && !variants.empty(), ErrorCode::InvalidParam, "need at least one method and variant");
  auto check_int = [](const IntRange& r, int floor, const char* what) {
    EFTC_REQUIRE(r.lo <= r.hi && r.lo >= floor, ErrorCode::InvalidParam,
                 std::string(what) + " range needs " + std::to_string(floor) + " <= lo <= hi");
  };
  auto check_real = [](const RealRange& r, double lo, double hi, const char* what) {
    EFTC_REQUIRE(std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo <= r.hi && r.lo > lo && r.hi <= hi,
                 ErrorCode::InvalidParam, std::string(what) + " range is empty or out of bounds");
  };
  check_int(max_depth, 1, "max_depth");
  check_int(min_samples_split, 2, "min_samples_split");
  check_int(k, 1, "k");
  check_int(max_leaves, 2, "max_leaves");
  check_real(learning_rate, 0.0, 1.0, "learning_rate");
  check_real(subsample, 0.0, 1.0, "subsample");
  check_real(colsample, 0.0, 1.0, "colsample");
  if (odd_k)
    EFTC_REQUIRE(k.hi > k.lo || k.lo % 2 == 1, ErrorCode::InvalidParam, "k range holds no odd value");
  EFTC_REQUIRE(n_trees >= 1 && rounds >= 1, ErrorCode::InvalidParam, "n_trees and rounds must be >= 1");
  EFTC_REQUIRE(fit_penalty > 0.0 && std::isfinite(fit_penalty), ErrorCode::InvalidParam, "fit_penalty must be > 0");
}

namespace {

IntRange int_range(const json& j) {
  if (j.is_number_integer()) return {j.get<int>(), j.get<int>()};
  EFTC_REQUIRE(j.is_array() && j.size() == 2, ErrorCode::InvalidParam, "integer range must be n or [lo, hi]");
  return {j[0].get<int>(), j[1].get<int>()};
}

RealRange real_range(const json& j, bool log_default) {
  if (j.is_number()) return {j.get<double>(), j.get<double>(), log_default};
  if (j.is_array()) {
    EFTC_REQUIRE(j.size() == 2, ErrorCode::InvalidParam, "real range must be x, [lo, hi] or an object");
    return {j[0].get<double>(), j[1].get<double>(), log_default};
  }
  EFTC_REQUIRE(j.is_object(), ErrorCode::InvalidParam, "real range must be x, [lo, hi] or an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    EFTC_REQUIRE(it.key() == "lo" || it.key() == "hi" || it.key() == "log", ErrorCode::InvalidParam,
                 "unknown range key '" + it.key() + "'");
  return {j.at("lo").get<double>(), j.at("hi").get<double>(), j.value("log", log_default)};
}

json range_json(const IntRange& r) { return json::array({r.lo, r.hi}); }
json range_json(const RealRange& r) { return {{"lo", r.lo}, {"hi", r.hi}, {"log", r.log_scale}}; }

}  // namespace

SweepConfig sweep_config_from_json(const json& doc) {
  EFTC_REQUIRE(doc.is_object(), ErrorCode::InvalidParam, "sweep config must be a JSON object");
  SweepConfig c;
  try {
    for (auto it = doc.begin(); it != doc.end(); ++it) {
      const std::string& key = it.key();
      const json& v = it.value();
      if (key == "methods") {
        c.methods.clear();
        for (const auto& m : v) c.methods.push_back(parse_method(m.get<std::string>()));
      } else if (key == "variants") {
        c.variants.clear();
        for (const auto& m : v) c.variants.push_back(parse_variant(m.get<std::string>()));
      } else if (key == "repetitions") {
        c.repetitions = v.get<int>();
      } else if (key == "master_seed") {
        c.master_seed = v.get<std::uint64_t>();
      } else if (key == "max_depth") {
        c.max_depth = int_range(v);
      } else if (key == "min_samples_split") {
        c.min_samples_split = int_range(v);
      } else if (key == "learning_rate") {
        c.learning_rate = real_range(v, true);
      } else if (key == "subsample") {
        c.subsample = real_range(v, false);
      } else if (key == "colsample") {
        c.colsample = real_range(v, false);
      } else if (key == "k") {
        c.k = int_range(v);
      } else if (key == "odd_k") {
        c.odd_k = v.get<bool>();
      } else if (key == "max_leaves") {
        c.max_leaves = int_range(v);
      } else if (key == "n_trees") {
        c.n_trees = v.get<int>();
      } else if (key == "rounds") {
        c.rounds = v.get<int>();
      } else if (key == "standardize") {
        c.standardize = v.get<bool>();
      } else if (key == "fit_penalty") {
        c.fit_penalty = v.get<double>();
      } else {
        throw Error(ErrorCode::InvalidParam, "unknown sweep config key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidParam, std::string("sweep config: ") + e.what());
  }
  std::sort(c.methods.begin(), c.methods.end());
  c.methods.erase(std::unique(c.methods.begin(), c.methods.end()), c.methods.end());
  std::sort(c.variants.begin(), c.variants.end());
  c.variants.erase(std::unique(c.variants.begin(), c.variants.end()), c.variants.end());
  c.validate();
  return c;
}

json to_json(const SweepConfig& c) {
  json methods = json::array(), variants = json::array();
  for (Method m : c.methods) methods.push_back(method_name(m));
  for (Variant v : c.variants) variants.push_back(variant_name(v));
  return {{"methods", methods},
          {"variants", variants},
          {"repetitions", c.repetitions},
          {"master_seed", c.master_seed},
          {"max_depth", range_json(c.max_depth)},
          {"min_samples_split", range_json(c.min_samples_split)},
          {"learning_rate", range_json(c.learning_rate)},
          {"subsample", range_json(c.subsample)},
          {"colsample", range_json(c.colsample)},
          {"k", range_json(c.k)},
          {"odd_k", c.odd_k},
          {"max_leaves", range_json(c.max_leaves)},
          {"n_trees", c.n_trees},
          {"rounds", c.rounds},
          {"standardize", c.standardize},
          {"fit_penalty", c.fit_penalty}};
}

json sample_hyperparameters(const SweepConfig& c, Method method, std::mt19937_64& rng) {
  auto draw_int = [&](const IntRange& r) { return std::uniform_int_distribution<int>(r.lo, r.hi)(rng); };
  auto draw_real = [&](const RealRange& r) {
    if (r.lo == r.hi) return r.lo;
    if (r.log_scale) return std::exp(std::uniform_real_distribution<double>(std::log(r.lo), std::log(r.hi))(rng));
    return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
  };
  switch (method) {
    case Method::Tree:
      return {{"max_depth", draw_int(c.max_depth)}, {"min_samples_split", draw_int(c.min_samples_split)}};
    case Method::Forest:
      return {{"n_trees", c.n_trees},
              {"max_depth", draw_int(c.max_depth)},
              {"min_samples_split", draw_int(c.min_samples_split)}};
    case Method::BoostLevel:
    case Method::BoostLeaf: {
      json p{{"rounds", c.rounds}, {"learning_rate", draw_real(c.learning_rate)}};
      if (method == Method::BoostLevel)
        p["max_depth"] = draw_int(c.max_depth);
      else
        p["max_leaves"] = draw_int(c.max_leaves);
      p["subsample"] = draw_real(c.subsample);
      p["colsample"] = draw_real(c.colsample);
      return p;
    }
    case Method::Knn: {
      if (!c.odd_k) return {{"k", draw_int(c.k)}};
      const int first = c.k.lo % 2 == 1 ? c.k.lo : c.k.lo + 1;
      const int count = (c.k.hi - first) / 2 + 1;
      return {{"k", first + 2 * std::uniform_int_distribution<int>(0, count - 1)(rng)}};
    }
  }
  return json::object();
}

std::uint64_t hyperparameter_seed(std::uint64_t master, Method method, int run_id) noexcept {
  return derive_seed(derive_seed(derive_seed(master, static_cast<std::uint64_t>(method)), 0),
                     static_cast<std::uint64_t>(run_id));
}

std::uint64_t training_seed(std::uint64_t master, Method method, Variant variant, int run_id) noexcept {
  return derive_seed(derive_seed(derive_seed(master, static_cast<std::uint64_t>(method)),
                                 1 + static_cast<std::uint64_t>(variant)),
                     static_cast<std::uint64_t>(run_id));
}

std::vector<RunRecord> run_sweep(const SweepConfig& config, const CurveSet& train, const CurveSet& test,
                                 const SweepOptions& options) {
  config.validate();
  train.validate();
  test.validate();
  EFTC_REQUIRE(train.time_grid == test.time_grid, ErrorCode::GridMismatch,
               "train and test curves must share one time grid");
  for (int y : test.labels)
    EFTC_REQUIRE(y < train.n_classes, ErrorCode::LabelMismatch, "test label outside the training label space");
  EFTC_REQUIRE(train.size() > 0 && test.size() > 0, ErrorCode::EmptyInput, "train and test need curves");

  const CurveFitter fitter = make_enrichment_fitter(train.time_grid, FitOptions{config.fit_penalty});
  struct Features {
    EnrichedMatrix train, test;
  };
  std::map<Variant, Features> features;
  for (Variant v : config.variants) {
    EnrichmentOptions opt;
    if (v == Variant::Original) opt.blocks = {Block::Orig};
    opt.standardize = config.standardize;
    opt.fit = FitOptions{config.fit_penalty};
    Features f;
    f.train = build_enriched(train, opt, &fitter);
    f.test = build_enriched(test, opt, &fitter, f.train.scaling);
    features.emplace(v, std::move(f));
  }

  struct Task {
    Method method;
    Variant variant;
    int run_id;
  };
  std::vector<Task> tasks;
  for (Method m : config.methods)
    for (Variant v : config.variants)
      for (int r = 0; r < config.repetitions; ++r) tasks.push_back({m, v, r});

  std::vector<RunRecord> records(tasks.size());
  std::vector<double> seconds(tasks.size());
  parallel_for(tasks.size(), [&](std::size_t i) {
    const Task& t = tasks[i];
    std::mt19937_64 rng(hyperparameter_seed(config.master_seed, t.method, t.run_id));
    json params = sample_hyperparameters(config, t.method, rng);
    if (t.method == Method::Knn)
      params["k"] = std::min(params["k"].get<int>(), static_cast<int>(train.size()));
    const Features& f = features.at(t.variant);
    const std::uint64_t seed = training_seed(config.master_seed, t.method, t.variant, t.run_id);
    const auto start = std::chrono::steady_clock::now();
    const Classifier model = train_classifier(t.method, params, f.train.features, f.train.labels, train.n_classes, seed);
    seconds[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    RunRecord& r = records[i];
    r.dataset = options.dataset;
    r.method = std::string(method_name(t.method));
    r.enriched = t.variant == Variant::Enriched;
    r.run_id = t.run_id;
    r.seed = seed;
    r.hyperparams = std::move(params);
    r.accuracy = evaluate(model, f.test.features, f.test.labels);
    r.train_seconds = options.record_timing ? seconds[i] : 0.0;
  });

  if (options.log)
    for (std::size_t i = 0; i < records.size(); ++i)
      *options.log << records[i].method << ' ' << variant_name(tasks[i].variant) << " run " << records[i].run_id
                   << ": accuracy " << format_double(records[i].accuracy) << ", " << seconds[i] << " s\n";
  return records;
}

double quantile(std::vector<double> values, double q) {
  EFTC_REQUIRE(!values.empty(), ErrorCode::EmptyInput, "quantile of an empty set");
  EFTC_REQUIRE(q >= 0.0 && q <= 1.0, ErrorCode::InvalidParam, "quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records,
                                  const std::vector<std::pair<std::string, bool>>& expected,
                                  std::vector<std::string>* warnings) {
  std::vector<std::pair<std::string, bool>> order;
  std::map<std::pair<std::string, bool>, std::vector<double>> groups;
  for (const auto& r : records) {
    const auto key = std::make_pair(r.method, r.enriched);
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(r.accuracy);
  }
  for (const auto& key : expected)
    if (!groups.count(key) && warnings)
      warnings->push_back("no runs for " + key.first + " " + (key.second ? "ENRICHED" : "ORIGINAL") +
                          "; group omitted");
  std::vector<SummaryRow> out;
  for (const auto& key : order) {
    const auto& v = groups[key];
    SummaryRow row;
    row.method = key.first;
    row.enriched = key.second;
    row.n = v.size();
    row.min = *std::min_element(v.begin(), v.end());
    row.max = *std::max_element(v.begin(), v.end());
    row.q1 = quantile(v, 0.25);
    row.median = quantile(v, 0.5);
    row.q3 = quantile(v, 0.75);
    out.push_back(row);
  }
  return out;
}

std::string format_summary(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %-9s %4s %7s %7s %7s %7s %7s\n", "method", "variant", "n", "min", "q1",
                "median", "q3", "max");
  out << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-12s %-9s %4zu %7.4f %7.4f %7.4f %7.4f %7.4f\n", r.method.c_str(),
                  r.enriched ? "ENRICHED" : "ORIGINAL", r.n, r.min, r.q1, r.median, r.q3, r.max);
    out << line;
  }
  return out.str();
}

}  // namespace eftc
