#include "eftc/knn.hpp"

#include <algorithm>
#include <numeric>

namespace eftc {

KnnModel train_knn(const Matrix& X, std::span<const int> y, int n_classes, int k) {
  EFTC_REQUIRE(X.rows() > 0, ErrorCode::EmptyInput, "empty training matrix");
  EFTC_REQUIRE(X.rows() == static_cast<Eigen::Index>(y.size()), ErrorCode::DimensionMismatch,
               "label count differs from row count");
  EFTC_REQUIRE(X.allFinite(), ErrorCode::NonFiniteInput, "training matrix has NaN or Inf");
  EFTC_REQUIRE(k >= 1 && k <= X.rows(), ErrorCode::InvalidParam,
               "k=" + std::to_string(k) + " must lie in 1.." + std::to_string(X.rows()));
  for (int v : y) EFTC_REQUIRE(v >= 0 && v < n_classes, ErrorCode::InvalidParam, "label out of range");
  return {X, std::vector<int>(y.begin(), y.end()), k, n_classes};
}

std::vector<int> KnnModel::neighbours(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  EFTC_REQUIRE(x.size() == stored_features.cols(), ErrorCode::DimensionMismatch,
               "feature vector length differs from the stored features");
  const Eigen::Index N = stored_features.rows();
  std::vector<double> d(static_cast<std::size_t>(N));
  for (Eigen::Index i = 0; i < N; ++i) d[static_cast<std::size_t>(i)] = (stored_features.row(i) - x).squaredNorm();
  std::vector<int> order(static_cast<std::size_t>(N));
  std::iota(order.begin(), order.end(), 0);
  auto closer = [&](int a, int b) {
    const double da = d[static_cast<std::size_t>(a)], db = d[static_cast<std::size_t>(b)];
    return da < db || (da == db && a < b);
  };
  std::partial_sort(order.begin(), order.begin() + k, order.end(), closer);
  order.resize(static_cast<std::size_t>(k));
  return order;
}

Vector KnnModel::predict_proba(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  Vector votes = Vector::Zero(n_classes);
  for (int i : neighbours(x)) votes[stored_labels[static_cast<std::size_t>(i)]] += 1.0;
  return votes / static_cast<double>(k);
}

int KnnModel::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  return argmax_lowest(predict_proba(x));
}

}  // namespace eftc
