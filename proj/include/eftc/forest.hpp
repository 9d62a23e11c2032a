#pragma once

#include "eftc/tree.hpp"

#include <optional>

namespace eftc {

struct ForestParams {
  int n_trees = 100;
  int max_depth = -1;
  int min_samples_split = 2;
  int mtry = 0;  // 0 picks floor(sqrt(P))
  bool per_split_features = true;  // false draws one feature subset per tree
  bool bootstrap = true;           // false trains every tree on all rows
  std::uint64_t seed = 0;
};

struct ForestModel {
  std::vector<Tree> trees;
  int mtry = 0;
  std::uint64_t seed = 0;
  std::optional<double> oob_accuracy;
  int n_features = 0;
  int n_classes = 0;

  template <class Row>
  int predict(const Row& x) const {
    std::vector<double> votes(static_cast<std::size_t>(n_classes), 0.0);
    for (const Tree& t : trees) votes[static_cast<std::size_t>(t.predict(x))] += 1.0;
    return argmax_lowest(votes);
  }

  /// Average of the trees' leaf class frequencies (with optional smoothing).
  template <class Row>
  Vector predict_proba(const Row& x, double smoothing = 0.0) const {
    Vector p = Vector::Zero(n_classes);
    for (const Tree& t : trees) p += t.leaf_distribution(t.leaf_index(x), smoothing);
    return p / static_cast<double>(trees.size());
  }
};

int default_mtry(int n_features);

/// Bagged CART trees. Tree b uses its own stream derive_seed(seed, b) for the
/// bootstrap draw and feature sampling, so results do not depend on how the
/// trees are scheduled across threads.
ForestModel train_forest(const Matrix& X, std::span<const int> y, int n_classes, const ForestParams& params);

}  // namespace eftc
