#pragma once

#include "eftc/tree.hpp"

namespace eftc {

enum class Growth { LevelWise, LeafWise };

struct BoostParams {
  int rounds = 100;
  double learning_rate = 0.1;   // eta in (0, 1]
  int max_depth = 6;            // level-wise depth; also caps leaf-wise trees when >= 0
  int max_leaves = 31;          // leaf-wise only
  double reg_lambda = 1.0;
  double reg_gamma = 0.0;
  double min_child_weight = 0.0;  // minimum hessian sum per child
  double subsample = 1.0;         // row fraction per round, without replacement
  double colsample = 1.0;         // feature fraction per tree
  Growth growth = Growth::LevelWise;
  std::uint64_t seed = 0;
};

/// Softmax gradient boosting, one regression tree per class per round.
struct BoostModel {
  BoostParams params;
  Vector base_scores;
  std::vector<std::vector<Tree>> trees;  // [round][class]
  int n_features = 0;
  int n_classes = 0;
  // Mean training cross-entropy before the first round and after each round.
  std::vector<double> train_loss;

  template <class Row>
  Vector scores(const Row& x) const {
    Vector s = base_scores;
    for (const auto& round : trees)
      for (int c = 0; c < n_classes; ++c) {
        const Tree& t = round[static_cast<std::size_t>(c)];
        s[c] += params.learning_rate * t.nodes[static_cast<std::size_t>(t.leaf_index(x))].leaf_weight;
      }
    return s;
  }

  template <class Row>
  Vector predict_proba(const Row& x) const {
    return softmax(scores(x));
  }

  template <class Row>
  int predict(const Row& x) const {
    return argmax_lowest(scores(x));
  }

  static Vector softmax(const Vector& scores);
};

/// Gradient/hessian regression tree used by the booster. Split gain is
/// 1/2 [GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l)] - gamma and leaf weights are
/// -G/(H+l); only splits with positive gain are made.
Tree train_gradient_tree(const Matrix& X, std::span<const double> grad, std::span<const double> hess,
                         std::span<const int> rows, std::span<const int> features, const BoostParams& params);

/// Throws InvalidParam for rounds < 1 (0 is allowed: uniform model),
/// eta outside (0,1], negative lambda/gamma, or sampling ratios outside (0,1].
BoostModel train_boost(const Matrix& X, std::span<const int> y, int n_classes, const BoostParams& params);

}  // namespace eftc
