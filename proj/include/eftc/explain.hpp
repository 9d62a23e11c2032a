#pragma once

#include "eftc/enrich.hpp"
#include "eftc/forest.hpp"
#include "eftc/tree.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace eftc {

/// One node on a root-to-z path. `direction` is 'L' or 'R' for the branch
/// taken towards z, and '-' for z itself.
struct PathStep {
  int node = 0;
  int depth = 0;
  int feature = -1;
  Block block = Block::Orig;
  int basis_index = 0;  // 0-based
  double threshold = 0.0;
  char direction = '-';
};

struct EmpiricalMatch {
  std::size_t index = 0;  // training row
  double distance = 0.0;  // L2 over the coefficients of the touched blocks
};

enum class OffPathFill { BlockMean, Zero };

/// Theoretical separation curves at a tree node, one per block touched by the
/// splits on the path (z's own split included when z is internal). Within a
/// block, coefficients split on take the threshold of the deepest such split;
/// the rest take the training mean of that column (or zero).
struct SeparationCurve {
  std::vector<PathStep> node_path;
  std::vector<double> t_grid;
  std::map<Block, Vector> coefficients;  // S coefficients per touched block
  std::map<Block, Vector> per_block_curves;  // evaluated on t_grid
  std::optional<EmpiricalMatch> empirical_match;
};

/// `train_features` are rows in the layout's column order, in the same space
/// the tree was trained in. When `scaling` is given (standardized training),
/// coefficients are mapped back to the basis scale before evaluation.
/// Errors: node not in tree -> InvalidPath; layout/basis/tree disagreement
/// -> DimensionMismatch.
SeparationCurve separation_curve(const Tree& tree, int node, const BasisSystem& basis, const BlockLayout& layout,
                                 const Matrix& train_features, std::span<const double> t_grid,
                                 OffPathFill fill = OffPathFill::BlockMean,
                                 const std::optional<ColumnScaling>& scaling = std::nullopt);

/// Rows `t,block,value`, blocks in canonical order.
std::string separation_curve_csv(const SeparationCurve& curve);

/// {i != j : |corr(X_i, X_j)| > tau}; constant columns correlate 0 with
/// everything. tau must lie in [0, 1].
std::vector<int> correlation_conditioning(const Matrix& X, int j, double tau);

/// Columns sharing j's basis index in every other block of the layout.
std::vector<int> same_spline_conditioning(const BlockLayout& layout, int j);

enum class ConditioningPolicy { SameSpline, CorrThreshold };

inline constexpr double kDefaultCorrelationThreshold = 0.7;

/// Trains on (X, y) and returns class probabilities for the rows of X_eval.
using ProbabilityTrainer = std::function<Matrix(const Matrix& X, std::span<const int> y, int n_classes,
                                                const Matrix& X_eval, std::uint64_t seed)>;

/// Small bagged forest of depth-4 trees with Laplace-smoothed leaves. With
/// zero columns it predicts the smoothed training class frequencies.
ProbabilityTrainer default_importance_trainer(ForestParams params = {50, 4, 20, 0, true, true, 0},
                                              double smoothing = 1.0);

struct ImportanceOptions {
  int repetitions = 20;
  double validation_fraction = 1.0 / 3.0;
  std::uint64_t seed = 0;
  ProbabilityTrainer trainer;  // empty means default_importance_trainer()
};

struct ImportanceReport {
  std::vector<int> features;          // S_j
  ConditioningPolicy policy = ConditioningPolicy::CorrThreshold;
  double tau = kDefaultCorrelationThreshold;
  std::vector<int> conditioning_set;  // C_j
  double importance = 0.0;            // mean loss(C_j) - loss(S_j u C_j)
  double loss_without = 0.0;
  double loss_with = 0.0;
  std::vector<double> per_repetition;
  int repetitions = 0;
  std::string loss_name = "cross_entropy";
};

/// Retrain-based conditional importance of the column group `features` given
/// `conditioning`: each repetition trains with a fresh seed on a fixed
/// training part and scores cross-entropy on the held-out part.
/// Errors: both sets empty -> NoFeatures; overlapping sets, bad indices or
/// options -> InvalidParam.
ImportanceReport conditional_importance(const Matrix& X, std::span<const int> y, int n_classes,
                                        const std::vector<int>& features, const std::vector<int>& conditioning,
                                        const ImportanceOptions& options = {});

/// Cross-entropy with probabilities clipped at 1e-15.
double cross_entropy(const Matrix& proba, std::span<const int> y);

std::string policy_name(ConditioningPolicy p);
/// One row per report.
std::string importance_csv(const std::vector<ImportanceReport>& reports);

}  // namespace eftc
