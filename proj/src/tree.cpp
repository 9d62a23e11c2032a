#include "eftc/tree.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace eftc {

int argmax_lowest(std::span<const double> v) {
  int best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  return best;
}

int argmax_lowest(const Vector& v) {
  return argmax_lowest(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

Vector Tree::leaf_distribution(int leaf, double smoothing) const {
  const TreeNode& n = nodes.at(static_cast<std::size_t>(leaf));
  Vector p(n_classes);
  double total = 0.0;
  for (int c = 0; c < n_classes; ++c) {
    const double w = (static_cast<std::size_t>(c) < n.class_counts.size() ? n.class_counts[static_cast<std::size_t>(c)] : 0.0);
    p[c] = w + smoothing;
    total += p[c];
  }
  if (total <= 0.0) return Vector::Constant(n_classes, 1.0 / n_classes);
  return p / total;
}

std::vector<int> Tree::path_to(int node) const {
  EFTC_REQUIRE(node >= 0 && node < static_cast<int>(nodes.size()), ErrorCode::InvalidPath,
               "node " + std::to_string(node) + " is not in the tree");
  std::vector<int> parent(nodes.size(), -1);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].is_leaf()) continue;
    parent[static_cast<std::size_t>(nodes[i].left)] = static_cast<int>(i);
    parent[static_cast<std::size_t>(nodes[i].right)] = static_cast<int>(i);
  }
  std::vector<int> path{node};
  while (path.back() != 0) {
    const int p = parent[static_cast<std::size_t>(path.back())];
    EFTC_REQUIRE(p >= 0, ErrorCode::InvalidPath, "node is unreachable from the root");
    path.push_back(p);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

int Tree::depth() const {
  int d = 0;
  for (const auto& n : nodes) d = std::max(d, n.depth);
  return d;
}

int Tree::leaf_count() const {
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

namespace {

constexpr double kTie = 1e-12;

struct Builder {
  const Matrix& X;
  std::span<const int> y;
  std::vector<double> w;
  int C;
  const TreeParams& params;
  std::vector<int> candidates;
  std::mt19937_64 rng;
  Tree tree;

  struct Best {
    int feature = -1;
    double threshold = 0.0;
    double impurity = 0.0;
  };

  std::vector<double> counts(const std::vector<int>& idx) const {
    std::vector<double> c(static_cast<std::size_t>(C), 0.0);
    for (int i : idx) c[static_cast<std::size_t>(y[static_cast<std::size_t>(i)])] += w[static_cast<std::size_t>(i)];
    return c;
  }

  static double gini_mass(const std::vector<double>& c, double total) {
    // total * Gini, i.e. total - sum c^2 / total
    if (total <= 0.0) return 0.0;
    double s = 0.0;
    for (double v : c) s += v * v;
    return total - s / total;
  }

  // Improves `best` with the best threshold on feature k if that is better.
  void scan_feature(int k, const std::vector<int>& idx, double total, Best& best, bool have_best) const {
    std::vector<std::pair<double, int>> order;
    order.reserve(idx.size());
    for (int i : idx) order.emplace_back(X(i, k), i);
    std::sort(order.begin(), order.end());
    if (order.front().first == order.back().first) return;

    std::vector<double> left(static_cast<std::size_t>(C), 0.0);
    std::vector<double> right = counts(idx);
    double wl = 0.0;
    bool found = false;
    for (std::size_t r = 0; r + 1 < order.size(); ++r) {
      const auto [v, i] = order[r];
      const double wi = w[static_cast<std::size_t>(i)];
      left[static_cast<std::size_t>(y[static_cast<std::size_t>(i)])] += wi;
      right[static_cast<std::size_t>(y[static_cast<std::size_t>(i)])] -= wi;
      wl += wi;
      const double next = order[r + 1].first;
      if (next == v) continue;
      const double wr = total - wl;
      const double imp = (gini_mass(left, wl) + gini_mass(right, wr)) / total;
      if (!(have_best || found) || imp < best.impurity - kTie) {
        double theta = 0.5 * (v + next);
        if (!(theta < next)) theta = v;  // adjacent doubles: keep v on the left
        best = {k, theta, imp};
        found = true;
      }
    }
  }

  int grow(std::vector<int> idx, int depth) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    std::vector<double> c = counts(idx);
    double total = 0.0;
    for (double v : c) total += v;
    {
      TreeNode& node = tree.nodes.back();
      node.depth = depth;
      node.class_counts = c;
      node.predicted_class = argmax_lowest(c);
    }
    const bool pure = std::count_if(c.begin(), c.end(), [](double v) { return v > 0.0; }) <= 1;
    const bool depth_left = params.max_depth < 0 || depth < params.max_depth;
    if (pure || !depth_left || total < static_cast<double>(params.min_samples_split)) return id;

    // With mtry, a random mtry-subset is searched in ascending feature order
    // (so ties still go to the lowest index); further features are drawn
    // only if every sampled one is constant in this node.
    std::vector<int> order = candidates;
    std::size_t quota = order.size();
    if (params.mtry > 0 && static_cast<std::size_t>(params.mtry) < order.size()) {
      std::shuffle(order.begin(), order.end(), rng);
      quota = static_cast<std::size_t>(params.mtry);
      std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(quota));
    }
    Best best;
    for (std::size_t r = 0; r < order.size(); ++r) {
      if (r >= quota && best.feature >= 0) break;
      scan_feature(order[r], idx, total, best, best.feature >= 0);
    }
    if (best.feature < 0) return id;

    std::vector<int> li, ri;
    for (int i : idx) (X(i, best.feature) <= best.threshold ? li : ri).push_back(i);
    idx.clear();
    idx.shrink_to_fit();
    tree.nodes[static_cast<std::size_t>(id)].feature = best.feature;
    tree.nodes[static_cast<std::size_t>(id)].threshold = best.threshold;
    const int l = grow(std::move(li), depth + 1);
    const int r = grow(std::move(ri), depth + 1);
    tree.nodes[static_cast<std::size_t>(id)].left = l;
    tree.nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  }
};

}  // namespace

Tree train_tree(const Matrix& X, std::span<const int> y, int n_classes, const TreeParams& params,
                std::span<const double> sample_weights, std::uint64_t seed) {
  EFTC_REQUIRE(X.rows() > 0 && X.cols() > 0, ErrorCode::EmptyInput, "empty training matrix");
  EFTC_REQUIRE(X.rows() == static_cast<Eigen::Index>(y.size()), ErrorCode::DimensionMismatch,
               "label count differs from row count");
  EFTC_REQUIRE(X.allFinite(), ErrorCode::NonFiniteInput, "training matrix has NaN or Inf");
  EFTC_REQUIRE(n_classes >= 1, ErrorCode::InvalidParam, "need at least one class");
  EFTC_REQUIRE(params.min_samples_split >= 1, ErrorCode::InvalidParam, "min_samples_split must be >= 1");
  EFTC_REQUIRE(params.mtry >= 0, ErrorCode::InvalidMtry, "mtry must be >= 0");
  for (int v : y) EFTC_REQUIRE(v >= 0 && v < n_classes, ErrorCode::InvalidParam, "label out of range");

  const auto N = static_cast<std::size_t>(X.rows());
  std::vector<double> w(N, 1.0);
  if (!sample_weights.empty()) {
    EFTC_REQUIRE(sample_weights.size() == N, ErrorCode::DimensionMismatch, "one weight per row required");
    for (std::size_t i = 0; i < N; ++i) {
      EFTC_REQUIRE(std::isfinite(sample_weights[i]) && sample_weights[i] >= 0.0, ErrorCode::InvalidParam,
                   "sample weights must be finite and >= 0");
      w[i] = sample_weights[i];
    }
  }

  std::vector<int> candidates = params.feature_subset;
  if (candidates.empty()) {
    candidates.resize(static_cast<std::size_t>(X.cols()));
    std::iota(candidates.begin(), candidates.end(), 0);
  } else {
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    for (int k : candidates)
      EFTC_REQUIRE(k >= 0 && k < X.cols(), ErrorCode::InvalidParam, "feature subset index out of range");
  }
  EFTC_REQUIRE(static_cast<std::size_t>(params.mtry) <= candidates.size(), ErrorCode::InvalidMtry,
               "mtry " + std::to_string(params.mtry) + " exceeds the " + std::to_string(candidates.size()) +
                   " candidate features");

  std::vector<int> idx;
  for (std::size_t i = 0; i < N; ++i)
    if (w[i] > 0.0) idx.push_back(static_cast<int>(i));
  EFTC_REQUIRE(!idx.empty(), ErrorCode::EmptyInput, "all sample weights are zero");

  Builder b{X, y, std::move(w), n_classes, params, std::move(candidates), std::mt19937_64(seed), {}};
  b.tree.n_features = static_cast<int>(X.cols());
  b.tree.n_classes = n_classes;
  b.grow(std::move(idx), 0);
  return std::move(b.tree);
}

}  // namespace eftc
