#include "eftc/forest.hpp"
#include "eftc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace eftc {

int default_mtry(int n_features) {
  return std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(n_features)))));
}

ForestModel train_forest(const Matrix& X, std::span<const int> y, int n_classes, const ForestParams& params) {
  EFTC_REQUIRE(params.n_trees >= 1, ErrorCode::InvalidParam, "forest needs at least one tree");
  EFTC_REQUIRE(X.rows() > 0 && X.cols() > 0, ErrorCode::EmptyInput, "empty training matrix");
  const int P = static_cast<int>(X.cols());
  const int mtry = params.mtry == 0 ? default_mtry(P) : params.mtry;
  EFTC_REQUIRE(mtry >= 1 && mtry <= P, ErrorCode::InvalidMtry,
               "mtry " + std::to_string(mtry) + " must lie in 1.." + std::to_string(P));

  const auto N = static_cast<std::size_t>(X.rows());
  const auto B = static_cast<std::size_t>(params.n_trees);
  ForestModel model;
  model.mtry = mtry;
  model.seed = params.seed;
  model.n_features = P;
  model.n_classes = n_classes;
  model.trees.resize(B);
  std::vector<std::vector<double>> weights(B);

  parallel_for(B, [&](std::size_t b) {
    std::mt19937_64 rng(derive_seed(params.seed, b));
    std::vector<double> w(N, 1.0);
    if (params.bootstrap) {
      std::fill(w.begin(), w.end(), 0.0);
      std::uniform_int_distribution<std::size_t> pick(0, N - 1);
      for (std::size_t d = 0; d < N; ++d) w[pick(rng)] += 1.0;
    }
    TreeParams tp;
    tp.max_depth = params.max_depth;
    tp.min_samples_split = params.min_samples_split;
    if (params.per_split_features) {
      tp.mtry = mtry == P ? 0 : mtry;
    } else {
      std::vector<int> all(static_cast<std::size_t>(P));
      std::iota(all.begin(), all.end(), 0);
      std::shuffle(all.begin(), all.end(), rng);
      tp.feature_subset.assign(all.begin(), all.begin() + mtry);
    }
    model.trees[b] = train_tree(X, y, n_classes, tp, w, rng());
    weights[b] = std::move(w);
  });

  if (params.bootstrap) {
    std::size_t scored = 0, correct = 0;
    for (std::size_t i = 0; i < N; ++i) {
      std::vector<double> votes(static_cast<std::size_t>(n_classes), 0.0);
      bool any = false;
      for (std::size_t b = 0; b < B; ++b) {
        if (weights[b][i] > 0.0) continue;
        votes[static_cast<std::size_t>(model.trees[b].predict(X.row(static_cast<Eigen::Index>(i))))] += 1.0;
        any = true;
      }
      if (!any) continue;
      ++scored;
      correct += argmax_lowest(votes) == y[i];
    }
    if (scored > 0) model.oob_accuracy = static_cast<double>(correct) / static_cast<double>(scored);
  }
  return model;
}

}  // namespace eftc
