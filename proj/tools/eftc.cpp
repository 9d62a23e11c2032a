// eftc: command-line front end for simulation, enrichment, training,
// evaluation, sweeps and explanations.
//
// Exit codes: 0 success, 2 validation error (bad input or parameters),
// 1 runtime error (I/O and the like).

#include "eftc/bench.hpp"
#include "eftc/dataio.hpp"
#include "eftc/error.hpp"
#include "eftc/explain.hpp"
#include "eftc/model.hpp"
#include "eftc/parallel.hpp"
#include "eftc/simgen.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <regex>

using namespace eftc;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json parse_json_arg(const std::string& text) {
  const std::string body = !text.empty() && text[0] == '@' ? read_text_file(text.substr(1)) : text;
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("invalid JSON: ") + e.what());
  }
}

std::string accuracy_text(double a) {
  std::string s = format_double(a);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

std::shared_ptr<const BasisSystem> basis_for_width(int basis_size) {
  // matrices come from label-first files on an equispaced [0, 1] grid with S = T + 2
  return std::make_shared<const BasisSystem>(BasisSystem::from_grid(equispaced_grid(static_cast<std::size_t>(basis_size - 2))));
}

struct SplitPaths {
  fs::path train, test;
  std::string name;
};

SplitPaths find_dataset(const fs::path& data, const std::string& name_hint) {
  if (fs::is_regular_file(data)) {
    const std::string stem = data.stem().string();
    const auto pos = stem.rfind("_TRAIN");
    EFTC_REQUIRE(pos != std::string::npos, ErrorCode::InvalidParam, "data file must be a <name>_TRAIN file");
    fs::path test = data;
    test.replace_filename(stem.substr(0, pos) + "_TEST" + data.extension().string());
    return {data, test, stem.substr(0, pos)};
  }
  EFTC_REQUIRE(fs::is_directory(data), ErrorCode::IoError, "no such data directory: " + data.string());
  std::string name = name_hint;
  if (name.empty()) {
    std::vector<std::string> found;
    for (const auto& e : fs::directory_iterator(data)) {
      const std::string stem = e.path().stem().string();
      const auto pos = stem.rfind("_TRAIN");
      if (e.is_regular_file() && pos != std::string::npos && pos + 6 == stem.size()) found.push_back(stem.substr(0, pos));
    }
    std::sort(found.begin(), found.end());
    found.erase(std::unique(found.begin(), found.end()), found.end());
    EFTC_REQUIRE(found.size() == 1, ErrorCode::InvalidParam,
                 "expected exactly one <name>_TRAIN file in " + data.string() + "; pass --dataset");
    name = found[0];
  }
  if (auto m = known_dataset(name, data)) return {m->train_path, m->test_path, name};
  for (const char* ext : {".tsv", ".txt", ".csv"}) {
    fs::path train = data / (name + "_TRAIN" + ext);
    if (fs::exists(train)) return {train, data / (name + "_TEST" + ext), name};
  }
  throw Error(ErrorCode::IoError, "no " + name + "_TRAIN file in " + data.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Enriched functional tree-based classifiers"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = all cores); results do not depend on it");
  std::string delimiter = "auto";

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a simulated scenario as train/test files");
  int scenario = 1;
  std::uint64_t sim_seed = 0;
  std::string sim_out;
  int curves_per_class = 100, time_points = 50;
  bool no_noise = false;
  sim->add_option("--scenario", scenario, "Scenario 1..6")->required();
  sim->add_option("--seed", sim_seed, "Random seed");
  sim->add_option("--out", sim_out, "Output directory")->required();
  sim->add_option("--curves-per-class", curves_per_class, "Curves per class before the half/half split");
  sim->add_option("--time-points", time_points, "Grid points on [0, 1]");
  sim->add_flag("--no-noise", no_noise, "Drop the Gaussian-process error term");

  // enrich
  auto* enr = app.add_subcommand("enrich", "Build the enriched coefficient matrix of a dataset file");
  std::string enr_in, enr_out, enr_train, enr_blocks = "all";
  bool standardize = false;
  double penalty = FitOptions{}.penalty;
  enr->add_option("--in", enr_in, "Label-first dataset file")->required();
  enr->add_option("--blocks", enr_blocks, "Comma-separated blocks (ORIG,D1,D2,CURV,RADIUS,ELAST) or all");
  enr->add_option("--out", enr_out, "Output matrix CSV")->required();
  enr->add_option("--train", enr_train, "Training file providing label mapping and scaling statistics");
  enr->add_flag("--standardize", standardize, "Z-score columns with training statistics");
  enr->add_option("--penalty", penalty, "Relative smoothing penalty of the coefficient fit");
  enr->add_option("--delimiter", delimiter, "auto, tab, comma or whitespace");

  // train
  auto* trn = app.add_subcommand("train", "Train a classifier on a matrix CSV");
  std::string trn_matrix, trn_method, trn_params = "{}", trn_model;
  std::uint64_t trn_seed = 0;
  trn->add_option("--matrix", trn_matrix, "Training matrix CSV")->required();
  trn->add_option("--method", trn_method, "TREE, FOREST, BOOST_LEVEL, BOOST_LEAF or KNN")->required();
  trn->add_option("--params", trn_params, "Hyperparameters as JSON text or @file");
  trn->add_option("--seed", trn_seed, "Training seed");
  trn->add_option("--model-out", trn_model, "Output model JSON")->required();

  // evaluate
  auto* evl = app.add_subcommand("evaluate", "Print the accuracy of a model on a matrix CSV");
  std::string evl_model, evl_matrix;
  evl->add_option("--model", evl_model, "Model JSON")->required();
  evl->add_option("--matrix", evl_matrix, "Matrix CSV")->required();

  // bench
  auto* bch = app.add_subcommand("bench", "Randomized-hyperparameter sweep, ORIGINAL vs ENRICHED");
  std::string bch_config, bch_data, bch_out, bch_dataset;
  std::uint64_t data_seed = 0;
  bool record_timing = false, data_seed_set = false;
  bch->add_option("--config", bch_config, "SweepConfig JSON file (or inline JSON)")->required();
  bch->add_option("--data", bch_data, "Dataset directory, <name>_TRAIN file, or scenario<N>")->required();
  bch->add_option("--dataset", bch_dataset, "Dataset name inside the directory");
  bch->add_option("--data-seed", data_seed, "Seed of a simulated scenario (default: master_seed)")
      ->each([&](const std::string&) { data_seed_set = true; });
  bch->add_option("--out", bch_out, "Output runs CSV")->required();
  bch->add_flag("--record-timing", record_timing, "Write measured train_seconds instead of 0");
  bch->add_option("--delimiter", delimiter, "auto, tab, comma or whitespace");

  // explain
  auto* exp = app.add_subcommand("explain", "Separation curves and conditional importance");
  exp->require_subcommand(1);
  auto* sep = exp->add_subcommand("sep-curve", "Separation curve at a tree node");
  std::string sep_model, sep_matrix, sep_out, sep_fill = "mean";
  int sep_node = 0, sep_tree = 0;
  sep->add_option("--model", sep_model, "TREE or FOREST model JSON")->required();
  sep->add_option("--matrix", sep_matrix, "Training matrix CSV")->required();
  sep->add_option("--node", sep_node, "Node index z");
  sep->add_option("--tree", sep_tree, "Tree index inside a forest");
  sep->add_option("--fill", sep_fill, "Off-path coefficients: mean or zero");
  sep->add_option("--out", sep_out, "Output curve CSV (t,block,value)")->required();

  auto* imp = exp->add_subcommand("importance", "Conditional feature importance");
  std::string imp_matrix, imp_out, imp_policy = "corr";
  std::vector<int> imp_features;
  double tau = kDefaultCorrelationThreshold;
  int reps = 20;
  std::uint64_t imp_seed = 0;
  imp->add_option("--matrix", imp_matrix, "Matrix CSV")->required();
  imp->add_option("--feature", imp_features, "Column index j (repeatable)")->required();
  imp->add_option("--policy", imp_policy, "corr (|rho| > tau) or same-spline");
  imp->add_option("--tau", tau, "Correlation threshold");
  imp->add_option("--repetitions", reps, "Retraining repetitions");
  imp->add_option("--seed", imp_seed, "Seed");
  imp->add_option("--out", imp_out, "Output report CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    set_thread_count(threads);
    const Delimiter delim = parse_delimiter(delimiter);

    if (*sim) {
      ScenarioSpec spec = scenario_spec(scenario, sim_seed);
      spec.curves_per_class = curves_per_class;
      spec.time_points = time_points;
      spec.noise = !no_noise;
      const SplitSets sets = generate_scenario(spec);
      const fs::path dir(sim_out);
      const std::string stem = "scenario" + std::to_string(scenario);
      save_ucr(dir / (stem + "_TRAIN.tsv"), sets.train);
      save_ucr(dir / (stem + "_TEST.tsv"), sets.test);
      std::cout << stem << ": " << sets.train.size() << " train, " << sets.test.size() << " test, "
                << sets.train.n_classes << " classes, " << sets.train.length() << " points\n";
    } else if (*enr) {
      EnrichmentOptions opt;
      opt.blocks = parse_block_list(enr_blocks);
      opt.standardize = standardize;
      opt.fit.penalty = penalty;
      std::optional<CurveSet> train;
      if (!enr_train.empty()) train = load_ucr(enr_train, delim);
      const LabelEncoder enc = train ? encoder_of(*train) : LabelEncoder{};
      const CurveSet in = load_ucr(enr_in, delim, train ? &enc : nullptr);
      const CurveFitter fitter = make_enrichment_fitter(train ? train->time_grid : in.time_grid, opt.fit);
      std::optional<ColumnScaling> scaling;
      if (train && standardize) scaling = build_enriched(*train, opt, &fitter).scaling;
      const EnrichedMatrix m = build_enriched(in, opt, &fitter, scaling);
      save_matrix(enr_out, m);
      std::cout << m.features.rows() << " rows x " << m.features.cols() << " columns\n";
    } else if (*trn) {
      const EnrichedMatrix m = load_matrix(trn_matrix);
      Classifier model = train_classifier(parse_method(trn_method), parse_json_arg(trn_params), m.features, m.labels,
                                          m.n_classes, trn_seed);
      model.layout = m.layout;
      model.basis = basis_for_width(m.layout.basis_size());
      save_model(trn_model, model);
      std::cout << "trained " << method_name(model.method) << " on " << m.rows() << " rows, training accuracy "
                << accuracy_text(evaluate(model, m.features, m.labels)) << "\n";
    } else if (*evl) {
      const Classifier model = load_model(evl_model);
      const EnrichedMatrix m = load_matrix(evl_matrix);
      EFTC_REQUIRE(model.layout.width() == 0 || model.layout == m.layout, ErrorCode::DimensionMismatch,
                   "matrix columns differ from the model's training layout");
      std::cout << accuracy_text(evaluate(model, m.features, m.labels)) << "\n";
    } else if (*bch) {
      const std::string cfg_text = fs::exists(bch_config) ? read_text_file(bch_config) : bch_config;
      const SweepConfig config = sweep_config_from_json(parse_json_arg(cfg_text));
      SplitSets sets;
      std::string name;
      static const std::regex scen(R"(scenario:?([0-9]+))", std::regex::icase);
      std::smatch match;
      if (std::regex_match(bch_data, match, scen) && !fs::exists(bch_data)) {
        const int id = std::stoi(match[1].str());
        sets = generate_scenario(scenario_spec(id, data_seed_set ? data_seed : config.master_seed));
        name = "scenario" + std::to_string(id);
      } else {
        const SplitPaths paths = find_dataset(bch_data, bch_dataset);
        sets.train = load_ucr(paths.train, delim);
        const LabelEncoder enc = encoder_of(sets.train);
        sets.test = load_ucr(paths.test, delim, &enc);
        name = paths.name;
      }
      SweepOptions opt;
      opt.dataset = name;
      opt.record_timing = record_timing;
      opt.log = &std::cerr;
      const auto records = run_sweep(config, sets.train, sets.test, opt);
      save_runs(bch_out, records);
      std::vector<std::pair<std::string, bool>> expected;
      for (Method m : config.methods)
        for (Variant v : config.variants) expected.emplace_back(std::string(method_name(m)), v == Variant::Enriched);
      std::vector<std::string> warnings;
      const auto rows = summarize(records, expected, &warnings);
      for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
      std::cout << name << " (" << records.size() << " runs)\n" << format_summary(rows);
    } else if (*sep) {
      const Classifier model = load_model(sep_model);
      const EnrichedMatrix m = load_matrix(sep_matrix);
      const Tree* tree = nullptr;
      if (const auto* t = std::get_if<Tree>(&model.impl)) {
        tree = t;
      } else if (const auto* f = std::get_if<ForestModel>(&model.impl)) {
        EFTC_REQUIRE(sep_tree >= 0 && sep_tree < static_cast<int>(f->trees.size()), ErrorCode::InvalidParam,
                     "tree index out of range");
        tree = &f->trees[static_cast<std::size_t>(sep_tree)];
      }
      EFTC_REQUIRE(tree != nullptr, ErrorCode::InvalidParam, "separation curves need a TREE or FOREST model");
      EFTC_REQUIRE(sep_fill == "mean" || sep_fill == "zero", ErrorCode::InvalidParam, "--fill must be mean or zero");
      const auto basis = model.basis ? model.basis : basis_for_width(m.layout.basis_size());
      const SeparationCurve sc =
          separation_curve(*tree, sep_node, *basis, m.layout, m.features, equispaced_grid(static_cast<std::size_t>(basis->size() - 2)),
                           sep_fill == "mean" ? OffPathFill::BlockMean : OffPathFill::Zero, model.scaling);
      write_text_file(sep_out, separation_curve_csv(sc));
      for (const auto& s : sc.node_path)
        std::cout << "node " << s.node << " depth " << s.depth << ": " << block_tag(s.block) << "_" << s.basis_index + 1
                  << " <= " << format_double(s.threshold) << " " << s.direction << "\n";
      if (sc.empirical_match)
        std::cout << "closest training curve: row " << sc.empirical_match->index << " at distance "
                  << format_double(sc.empirical_match->distance) << "\n";
    } else if (*imp) {
      const EnrichedMatrix m = load_matrix(imp_matrix);
      EFTC_REQUIRE(imp_policy == "corr" || imp_policy == "same-spline", ErrorCode::InvalidParam,
                   "--policy must be corr or same-spline");
      const ConditioningPolicy policy = imp_policy == "corr" ? ConditioningPolicy::CorrThreshold : ConditioningPolicy::SameSpline;
      ImportanceOptions opt;
      opt.repetitions = reps;
      opt.seed = imp_seed;
      std::vector<ImportanceReport> reports;
      for (int j : imp_features) {
        const auto C = policy == ConditioningPolicy::CorrThreshold ? correlation_conditioning(m.features, j, tau)
                                                                   : same_spline_conditioning(m.layout, j);
        ImportanceReport r = conditional_importance(m.features, m.labels, m.n_classes, {j}, C, opt);
        r.policy = policy;
        r.tau = tau;
        std::cout << m.layout.column_name(j) << ": importance " << format_double(r.importance) << " given "
                  << C.size() << " conditioning columns\n";
        reports.push_back(std::move(r));
      }
      if (!imp_out.empty()) write_text_file(imp_out, importance_csv(reports));
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_validation_error(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
