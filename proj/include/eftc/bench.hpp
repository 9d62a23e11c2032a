#pragma once

#include "eftc/dataio.hpp"
#include "eftc/model.hpp"

#include <json.hpp>

#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace eftc {

enum class Variant { Original, Enriched };

inline constexpr std::array<Variant, 2> kAllVariants{Variant::Original, Variant::Enriched};

std::string_view variant_name(Variant v) noexcept;  // "ORIGINAL" / "ENRICHED"
Variant parse_variant(std::string_view name);

struct IntRange {
  int lo = 0;
  int hi = 0;
  bool operator==(const IntRange&) const = default;
};

struct RealRange {
  double lo = 0.0;
  double hi = 0.0;
  bool log_scale = false;
  bool operator==(const RealRange&) const = default;
};

/// Randomized-hyperparameter sweep: each method x variant gets
/// `repetitions` runs with hyperparameters drawn uniformly from these ranges.
struct SweepConfig {
  std::vector<Method> methods{kAllMethods.begin(), kAllMethods.end()};
  std::vector<Variant> variants{kAllVariants.begin(), kAllVariants.end()};
  int repetitions = 30;
  std::uint64_t master_seed = 0;

  IntRange max_depth{2, 12};
  IntRange min_samples_split{2, 20};
  RealRange learning_rate{0.03, 0.3, true};
  RealRange subsample{0.6, 1.0};
  RealRange colsample{0.6, 1.0};
  IntRange k{1, 15};
  bool odd_k = true;
  IntRange max_leaves{4, 64};
  int n_trees = 100;
  int rounds = 100;

  bool standardize = false;  // z-score the feature columns on the training rows
  double fit_penalty = FitOptions{}.penalty;

  /// InvalidParam on R < 1, empty method/variant lists or lo > hi ranges.
  void validate() const;

  bool operator==(const SweepConfig&) const = default;
};

/// Missing keys keep their defaults; unknown keys are rejected (InvalidParam).
SweepConfig sweep_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const SweepConfig& config);

/// Hyperparameters for one run of `method`, as accepted by train_classifier.
nlohmann::json sample_hyperparameters(const SweepConfig& config, Method method, std::mt19937_64& rng);

/// Seeds of run `run_id`: hyperparameters depend on (master, method, run_id)
/// only, so both variants of a run share them; the training seed also
/// depends on the variant.
std::uint64_t hyperparameter_seed(std::uint64_t master, Method method, int run_id) noexcept;
std::uint64_t training_seed(std::uint64_t master, Method method, Variant variant, int run_id) noexcept;

struct SweepOptions {
  std::string dataset = "dataset";
  bool record_timing = false;  // false writes train_seconds = 0 for byte-stable output
  std::ostream* log = nullptr;  // per-run wall-clock lines
};

/// Runs every (method, variant, run) and returns the records sorted by
/// (method, variant, run_id). ORIGINAL uses the ORIG block only and ENRICHED
/// all six, both from one basis built on the training grid.
/// Errors: different train/test grids -> GridMismatch; test labels outside
/// the training label space -> LabelMismatch.
std::vector<RunRecord> run_sweep(const SweepConfig& config, const CurveSet& train, const CurveSet& test,
                                 const SweepOptions& options = {});

struct SummaryRow {
  std::string method;
  bool enriched = false;
  std::size_t n = 0;
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

/// Per method x variant accuracy quartiles (linear interpolation between
/// order statistics), in (method, variant) order of first appearance after
/// sorting. Groups named in `expected` but without records are left out and
/// reported in `warnings`.
std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records,
                                  const std::vector<std::pair<std::string, bool>>& expected = {},
                                  std::vector<std::string>* warnings = nullptr);

/// Interpolated quantile of sorted-on-the-fly values, q in [0, 1].
double quantile(std::vector<double> values, double q);

std::string format_summary(const std::vector<SummaryRow>& rows);

}  // namespace eftc
