#include "eftc/boost.hpp"
#include "eftc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace eftc {

Vector BoostModel::softmax(const Vector& scores) {
  const double m = scores.maxCoeff();
  Vector e = (scores.array() - m).exp();
  return e / e.sum();
}

namespace {

constexpr double kTie = 1e-12;

struct Candidate {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

struct GradBuilder {
  const Matrix& X;
  std::span<const double> g;
  std::span<const double> h;
  std::span<const int> features;
  const BoostParams& p;
  Tree tree;
  std::vector<std::vector<int>> members;  // rows of each node while growing

  double score(double G, double H) const { return G * G / (H + p.reg_lambda); }

  double weight(const std::vector<int>& idx) const {
    double G = 0.0, H = 0.0;
    for (int i : idx) {
      G += g[static_cast<std::size_t>(i)];
      H += h[static_cast<std::size_t>(i)];
    }
    const double denom = H + p.reg_lambda;
    return denom > 0.0 ? -G / denom : 0.0;
  }

  Candidate best_split(const std::vector<int>& idx) const {
    Candidate best;
    if (idx.size() < 2) return best;
    double G = 0.0, H = 0.0;
    for (int i : idx) {
      G += g[static_cast<std::size_t>(i)];
      H += h[static_cast<std::size_t>(i)];
    }
    const double parent = score(G, H);
    std::vector<std::pair<double, int>> order(idx.size());
    for (int k : features) {
      for (std::size_t r = 0; r < idx.size(); ++r) order[r] = {X(idx[r], k), idx[r]};
      std::sort(order.begin(), order.end());
      if (order.front().first == order.back().first) continue;
      double GL = 0.0, HL = 0.0;
      for (std::size_t r = 0; r + 1 < order.size(); ++r) {
        const auto [v, i] = order[r];
        GL += g[static_cast<std::size_t>(i)];
        HL += h[static_cast<std::size_t>(i)];
        const double next = order[r + 1].first;
        if (next == v) continue;
        const double GR = G - GL, HR = H - HL;
        if (HL < p.min_child_weight || HR < p.min_child_weight) continue;
        const double gain = 0.5 * (score(GL, HL) + score(GR, HR) - parent) - p.reg_gamma;
        if (gain > kTie && (best.feature < 0 || gain > best.gain + kTie)) {
          double theta = 0.5 * (v + next);
          if (!(theta < next)) theta = v;
          best = {k, theta, gain};
        }
      }
    }
    return best;
  }

  int add_node(std::vector<int> idx, int depth) {
    TreeNode n;
    n.depth = depth;
    n.leaf_weight = weight(idx);
    tree.nodes.push_back(n);
    members.push_back(std::move(idx));
    return static_cast<int>(tree.nodes.size()) - 1;
  }

  void apply(int id, const Candidate& c) {
    std::vector<int> li, ri;
    for (int i : members[static_cast<std::size_t>(id)]) (X(i, c.feature) <= c.threshold ? li : ri).push_back(i);
    members[static_cast<std::size_t>(id)].clear();
    const int depth = tree.nodes[static_cast<std::size_t>(id)].depth;
    const int l = add_node(std::move(li), depth + 1);
    const int r = add_node(std::move(ri), depth + 1);
    TreeNode& n = tree.nodes[static_cast<std::size_t>(id)];
    n.feature = c.feature;
    n.threshold = c.threshold;
    n.left = l;
    n.right = r;
  }

  void grow_level_wise() {
    std::vector<int> frontier{0};
    for (int depth = 0; p.max_depth < 0 || depth < p.max_depth; ++depth) {
      std::vector<int> next;
      for (int id : frontier) {
        const Candidate c = best_split(members[static_cast<std::size_t>(id)]);
        if (c.feature < 0) continue;
        apply(id, c);
        next.push_back(tree.nodes[static_cast<std::size_t>(id)].left);
        next.push_back(tree.nodes[static_cast<std::size_t>(id)].right);
      }
      if (next.empty()) break;
      frontier = std::move(next);
    }
  }

  void grow_leaf_wise() {
    std::vector<std::pair<int, Candidate>> frontier{{0, best_split(members[0])}};
    int leaves = 1;
    while (leaves < p.max_leaves) {
      int pick = -1;
      for (std::size_t f = 0; f < frontier.size(); ++f) {
        const auto& [id, c] = frontier[f];
        if (c.feature < 0) continue;
        if (p.max_depth >= 0 && tree.nodes[static_cast<std::size_t>(id)].depth >= p.max_depth) continue;
        if (pick < 0 || c.gain > frontier[static_cast<std::size_t>(pick)].second.gain + kTie)
          pick = static_cast<int>(f);
      }
      if (pick < 0) break;
      const auto [id, c] = frontier[static_cast<std::size_t>(pick)];
      frontier.erase(frontier.begin() + pick);
      apply(id, c);
      ++leaves;
      for (int child : {tree.nodes[static_cast<std::size_t>(id)].left, tree.nodes[static_cast<std::size_t>(id)].right})
        frontier.emplace_back(child, best_split(members[static_cast<std::size_t>(child)]));
      // keep frontier ordered by node index so gain ties go to the older leaf
      std::sort(frontier.begin(), frontier.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    }
  }
};

void check_params(const BoostParams& p) {
  EFTC_REQUIRE(p.rounds >= 0, ErrorCode::InvalidParam, "rounds must be >= 0");
  EFTC_REQUIRE(p.learning_rate > 0.0 && p.learning_rate <= 1.0, ErrorCode::InvalidParam,
               "learning rate must lie in (0, 1]");
  EFTC_REQUIRE(p.reg_lambda >= 0.0 && std::isfinite(p.reg_lambda), ErrorCode::InvalidParam, "lambda must be >= 0");
  EFTC_REQUIRE(p.reg_gamma >= 0.0 && std::isfinite(p.reg_gamma), ErrorCode::InvalidParam, "gamma must be >= 0");
  EFTC_REQUIRE(p.min_child_weight >= 0.0, ErrorCode::InvalidParam, "min_child_weight must be >= 0");
  EFTC_REQUIRE(p.subsample > 0.0 && p.subsample <= 1.0, ErrorCode::InvalidParam, "subsample must lie in (0, 1]");
  EFTC_REQUIRE(p.colsample > 0.0 && p.colsample <= 1.0, ErrorCode::InvalidParam, "colsample must lie in (0, 1]");
  EFTC_REQUIRE(p.growth == Growth::LevelWise || p.max_leaves >= 1, ErrorCode::InvalidParam,
               "max_leaves must be >= 1");
}

std::vector<int> draw_subset(int n, double ratio, std::mt19937_64& rng) {
  std::vector<int> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  if (ratio >= 1.0) return all;
  const auto keep = static_cast<std::size_t>(std::max(1.0, std::round(ratio * n)));
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(keep);
  std::sort(all.begin(), all.end());
  return all;
}

double mean_log_loss(const Matrix& scores, std::span<const int> y) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const Vector p = BoostModel::softmax(scores.row(i).transpose());
    loss -= std::log(std::max(p[y[static_cast<std::size_t>(i)]], 1e-300));
  }
  return loss / static_cast<double>(scores.rows());
}

}  // namespace

Tree train_gradient_tree(const Matrix& X, std::span<const double> grad, std::span<const double> hess,
                         std::span<const int> rows, std::span<const int> features, const BoostParams& params) {
  GradBuilder b{X, grad, hess, features, params, {}, {}};
  b.tree.n_features = static_cast<int>(X.cols());
  b.tree.n_classes = 0;
  b.add_node(std::vector<int>(rows.begin(), rows.end()), 0);
  if (params.growth == Growth::LevelWise)
    b.grow_level_wise();
  else
    b.grow_leaf_wise();
  return std::move(b.tree);
}

BoostModel train_boost(const Matrix& X, std::span<const int> y, int n_classes, const BoostParams& params) {
  check_params(params);
  EFTC_REQUIRE(X.rows() > 0 && X.cols() > 0, ErrorCode::EmptyInput, "empty training matrix");
  EFTC_REQUIRE(X.rows() == static_cast<Eigen::Index>(y.size()), ErrorCode::DimensionMismatch,
               "label count differs from row count");
  EFTC_REQUIRE(X.allFinite(), ErrorCode::NonFiniteInput, "training matrix has NaN or Inf");
  EFTC_REQUIRE(n_classes >= 2, ErrorCode::InvalidParam, "boosting needs at least two classes");
  for (int v : y) EFTC_REQUIRE(v >= 0 && v < n_classes, ErrorCode::InvalidParam, "label out of range");

  const Eigen::Index N = X.rows();
  const int C = n_classes;
  BoostModel m;
  m.params = params;
  m.n_features = static_cast<int>(X.cols());
  m.n_classes = C;
  m.base_scores = Vector::Zero(C);

  Matrix F = Matrix::Zero(N, C);
  m.train_loss.push_back(mean_log_loss(F, y));
  for (int round = 0; round < params.rounds; ++round) {
    const std::uint64_t round_seed = derive_seed(params.seed, static_cast<std::uint64_t>(round));
    std::mt19937_64 row_rng(derive_seed(round_seed, 0));
    const std::vector<int> rows = draw_subset(static_cast<int>(N), params.subsample, row_rng);

    Matrix P(N, C);
    for (Eigen::Index i = 0; i < N; ++i) P.row(i) = BoostModel::softmax(F.row(i).transpose()).transpose();

    std::vector<Tree> round_trees(static_cast<std::size_t>(C));
    parallel_for(static_cast<std::size_t>(C), [&](std::size_t c) {
      std::vector<double> g(static_cast<std::size_t>(N)), h(static_cast<std::size_t>(N));
      for (Eigen::Index i = 0; i < N; ++i) {
        const double pic = P(i, static_cast<Eigen::Index>(c));
        g[static_cast<std::size_t>(i)] = pic - (y[static_cast<std::size_t>(i)] == static_cast<int>(c) ? 1.0 : 0.0);
        h[static_cast<std::size_t>(i)] = pic * (1.0 - pic);
      }
      std::mt19937_64 col_rng(derive_seed(round_seed, c + 1));
      const std::vector<int> cols = draw_subset(static_cast<int>(X.cols()), params.colsample, col_rng);
      round_trees[c] = train_gradient_tree(X, g, h, rows, cols, params);
    });

    for (int c = 0; c < C; ++c) {
      const Tree& t = round_trees[static_cast<std::size_t>(c)];
      for (Eigen::Index i = 0; i < N; ++i)
        F(i, c) += params.learning_rate * t.nodes[static_cast<std::size_t>(t.leaf_index(X.row(i)))].leaf_weight;
    }
    m.trees.push_back(std::move(round_trees));
    m.train_loss.push_back(mean_log_loss(F, y));
  }
  return m;
}

}  // namespace eftc
