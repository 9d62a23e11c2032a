#pragma once

#include "eftc/basis.hpp"
#include "eftc/error.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace eftc {

/// One node of a flat binary tree. Internal nodes route x[feature] <= threshold
/// to `left`, everything else to `right`. Leaves (feature < 0) carry the
/// (weighted) class counts of their training rows, or a boosting weight.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int depth = 0;
  std::vector<double> class_counts;
  int predicted_class = 0;
  double leaf_weight = 0.0;

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

/// Flat tree; nodes[0] is the root and children always follow their parent.
struct Tree {
  std::vector<TreeNode> nodes;
  int n_features = 0;
  int n_classes = 0;

  template <class Row>
  int leaf_index(const Row& x) const {
    EFTC_REQUIRE(static_cast<int>(x.size()) == n_features, ErrorCode::DimensionMismatch,
                 "feature vector has " + std::to_string(x.size()) + " entries, tree expects " +
                     std::to_string(n_features));
    int i = 0;
    while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
      const TreeNode& n = nodes[static_cast<std::size_t>(i)];
      i = x[n.feature] <= n.threshold ? n.left : n.right;
    }
    return i;
  }

  template <class Row>
  int predict(const Row& x) const {
    return nodes[static_cast<std::size_t>(leaf_index(x))].predicted_class;
  }

  /// Leaf class frequencies with additive smoothing (0 = raw frequencies).
  Vector leaf_distribution(int leaf, double smoothing = 0.0) const;

  /// Node indices from the root down to `node`; throws InvalidPath if absent.
  std::vector<int> path_to(int node) const;

  int depth() const;
  int leaf_count() const;

  bool operator==(const Tree&) const = default;
};

struct TreeParams {
  int max_depth = 10;          // < 0 means unlimited
  int min_samples_split = 2;   // compared against the node's total sample weight
  // Features drawn at random for every split; 0 uses all candidates.
  int mtry = 0;
  // Restricts the candidate features; empty means all columns.
  std::vector<int> feature_subset;
};

/// CART classification tree: at each node the (feature, threshold) pair with
/// the smallest weighted child Gini impurity, thresholds at midpoints between
/// consecutive distinct values. Ties go to the lowest feature, then the
/// lowest threshold. Rows with zero weight are ignored, so integer weights
/// behave exactly like duplicated rows.
Tree train_tree(const Matrix& X, std::span<const int> y, int n_classes, const TreeParams& params,
                std::span<const double> sample_weights = {}, std::uint64_t seed = 0);

/// Index of the largest entry, lowest index on ties.
int argmax_lowest(std::span<const double> v);
int argmax_lowest(const Vector& v);

}  // namespace eftc
