#pragma once

#include "eftc/tree.hpp"

namespace eftc {

/// K-nearest-neighbour classifier on Euclidean distance. Equal distances go
/// to the lower stored index, equal votes to the smaller class.
struct KnnModel {
  Matrix stored_features;
  std::vector<int> stored_labels;
  int k = 1;
  int n_classes = 0;

  /// Indices of the k nearest stored rows, nearest first.
  std::vector<int> neighbours(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  Vector predict_proba(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  int predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
};

/// Throws InvalidParam unless 1 <= k <= N.
KnnModel train_knn(const Matrix& X, std::span<const int> y, int n_classes, int k);

}  // namespace eftc
