#include "eftc/explain.hpp"
#include "eftc/dataio.hpp"
#include "eftc/error.hpp"
#include "eftc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

namespace eftc {

SeparationCurve separation_curve(const Tree& tree, int node, const BasisSystem& basis, const BlockLayout& layout,
                                 const Matrix& train_features, std::span<const double> t_grid, OffPathFill fill,
                                 const std::optional<ColumnScaling>& scaling) {
  const std::vector<int> path = tree.path_to(node);
  EFTC_REQUIRE(layout.basis_size() == basis.size(), ErrorCode::DimensionMismatch,
               "layout basis size differs from the basis");
  EFTC_REQUIRE(tree.n_features == layout.width() && train_features.cols() == layout.width(),
               ErrorCode::DimensionMismatch, "tree, layout and training matrix disagree on the column count");
  EFTC_REQUIRE(train_features.rows() > 0, ErrorCode::EmptyInput, "training matrix is empty");
  if (scaling)
    EFTC_REQUIRE(scaling->mean.size() == layout.width() && scaling->scale.size() == layout.width(),
                 ErrorCode::DimensionMismatch, "scaling width differs from the layout");

  SeparationCurve out;
  out.t_grid.assign(t_grid.begin(), t_grid.end());
  const int S = layout.basis_size();

  // deepest split wins when a coefficient repeats along the path
  std::map<int, double> gamma;
  for (std::size_t k = 0; k < path.size(); ++k) {
    const TreeNode& n = tree.nodes[static_cast<std::size_t>(path[k])];
    if (n.is_leaf()) continue;
    PathStep step;
    step.node = path[k];
    step.depth = n.depth;
    step.feature = n.feature;
    step.block = layout.block_of(n.feature);
    step.basis_index = layout.basis_index_of(n.feature);
    step.threshold = n.threshold;
    if (k + 1 < path.size()) step.direction = path[k + 1] == n.left ? 'L' : 'R';
    out.node_path.push_back(step);
    gamma[n.feature] = n.threshold;
  }

  std::set<Block> touched;
  for (const auto& s : out.node_path) touched.insert(s.block);
  const Vector means = train_features.colwise().mean().transpose();
  const Matrix design = basis.design_matrix(t_grid);
  std::vector<int> columns;
  Vector target(0);
  for (Block b : touched) {
    const int begin = layout.range(b).first;
    Vector c(S);
    for (int s = 0; s < S; ++s) {
      const int col = begin + s;
      const auto it = gamma.find(col);
      c[s] = it != gamma.end() ? it->second : (fill == OffPathFill::BlockMean ? means[col] : 0.0);
      columns.push_back(col);
    }
    target.conservativeResize(target.size() + S);
    target.tail(S) = c;
    Vector raw = c;
    if (scaling)
      for (int s = 0; s < S; ++s) raw[s] = c[s] * scaling->scale[begin + s] + scaling->mean[begin + s];
    out.per_block_curves[b] = design * raw;
    out.coefficients[b] = std::move(raw);
  }

  if (!columns.empty()) {
    EmpiricalMatch best{0, std::numeric_limits<double>::infinity()};
    for (Eigen::Index i = 0; i < train_features.rows(); ++i) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < columns.size(); ++k) {
        const double d = train_features(i, columns[k]) - target[static_cast<Eigen::Index>(k)];
        d2 += d * d;
      }
      if (d2 < best.distance) best = {static_cast<std::size_t>(i), d2};
    }
    best.distance = std::sqrt(best.distance);
    out.empirical_match = best;
  }
  return out;
}

std::string separation_curve_csv(const SeparationCurve& curve) {
  std::string out = "t,block,value\n";
  for (const auto& [b, values] : curve.per_block_curves)
    for (std::size_t j = 0; j < curve.t_grid.size(); ++j)
      out += format_double(curve.t_grid[j]) + "," + std::string(block_tag(b)) + "," +
             format_double(values[static_cast<Eigen::Index>(j)]) + "\n";
  return out;
}

std::vector<int> correlation_conditioning(const Matrix& X, int j, double tau) {
  EFTC_REQUIRE(tau >= 0.0 && tau <= 1.0, ErrorCode::InvalidParam, "tau must lie in [0, 1]");
  EFTC_REQUIRE(j >= 0 && j < X.cols(), ErrorCode::InvalidParam, "feature index out of range");
  EFTC_REQUIRE(X.rows() >= 2, ErrorCode::EmptyInput, "correlation needs at least two rows");
  const Matrix centred = X.rowwise() - X.colwise().mean();
  const Vector norms = centred.colwise().norm().transpose();
  std::vector<int> out;
  if (norms[j] == 0.0) return out;
  for (Eigen::Index i = 0; i < X.cols(); ++i) {
    if (i == j || norms[i] == 0.0) continue;
    const double rho = centred.col(i).dot(centred.col(j)) / (norms[i] * norms[j]);
    if (std::abs(rho) > tau) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> same_spline_conditioning(const BlockLayout& layout, int j) {
  EFTC_REQUIRE(j >= 0 && j < layout.width(), ErrorCode::InvalidParam, "feature index out of range");
  const Block own = layout.block_of(j);
  const int s = layout.basis_index_of(j);
  std::vector<int> out;
  for (Block b : layout.blocks())
    if (b != own) out.push_back(layout.column(b, s));
  return out;
}

ProbabilityTrainer default_importance_trainer(ForestParams params, double smoothing) {
  return [params, smoothing](const Matrix& X, std::span<const int> y, int C, const Matrix& X_eval,
                             std::uint64_t seed) -> Matrix {
    Matrix P(X_eval.rows(), C);
    if (X.cols() == 0) {
      Eigen::RowVectorXd prior = Eigen::RowVectorXd::Constant(C, smoothing);
      for (int label : y) prior[label] += 1.0;
      prior /= prior.sum();
      P.rowwise() = prior;
      return P;
    }
    ForestParams p = params;
    p.seed = seed;
    const ForestModel f = train_forest(X, y, C, p);
    for (Eigen::Index i = 0; i < X_eval.rows(); ++i) P.row(i) = f.predict_proba(X_eval.row(i), smoothing).transpose();
    return P;
  };
}

double cross_entropy(const Matrix& proba, std::span<const int> y) {
  EFTC_REQUIRE(proba.rows() == static_cast<Eigen::Index>(y.size()), ErrorCode::DimensionMismatch,
               "probability rows differ from label count");
  EFTC_REQUIRE(!y.empty(), ErrorCode::EmptyInput, "no rows to score");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i)
    s -= std::log(std::max(proba(static_cast<Eigen::Index>(i), y[i]), 1e-15));
  return s / static_cast<double>(y.size());
}

namespace {

Matrix take(const Matrix& X, const std::vector<Eigen::Index>& rows, const std::vector<int>& cols) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = X(rows[r], cols[c]);
  return out;
}

}  // namespace

ImportanceReport conditional_importance(const Matrix& X, std::span<const int> y, int n_classes,
                                        const std::vector<int>& features, const std::vector<int>& conditioning,
                                        const ImportanceOptions& options) {
  EFTC_REQUIRE(!features.empty() || !conditioning.empty(), ErrorCode::NoFeatures,
               "importance needs at least one feature in S_j or C_j");
  EFTC_REQUIRE(X.rows() == static_cast<Eigen::Index>(y.size()), ErrorCode::DimensionMismatch,
               "row count differs from label count");
  EFTC_REQUIRE(options.repetitions >= 1, ErrorCode::InvalidParam, "need at least one repetition");
  EFTC_REQUIRE(options.validation_fraction > 0.0 && options.validation_fraction < 1.0, ErrorCode::InvalidParam,
               "validation fraction must lie in (0, 1)");
  EFTC_REQUIRE(n_classes >= 2, ErrorCode::InvalidParam, "need at least two classes");
  std::set<int> seen;
  for (const auto* set : {&features, &conditioning})
    for (int c : *set) {
      EFTC_REQUIRE(c >= 0 && c < X.cols(), ErrorCode::InvalidParam, "feature index out of range");
      EFTC_REQUIRE(seen.insert(c).second, ErrorCode::InvalidParam, "S_j and C_j must be disjoint");
    }
  for (int label : y) EFTC_REQUIRE(label >= 0 && label < n_classes, ErrorCode::InvalidParam, "label out of range");

  // stratified held-out part, fixed across repetitions
  std::vector<Eigen::Index> fit_rows, val_rows;
  {
    std::mt19937_64 rng(derive_seed(options.seed, 0));
    for (int c = 0; c < n_classes; ++c) {
      std::vector<Eigen::Index> rows;
      for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] == c) rows.push_back(static_cast<Eigen::Index>(i));
      std::shuffle(rows.begin(), rows.end(), rng);
      const auto n_val = static_cast<std::size_t>(std::llround(options.validation_fraction * static_cast<double>(rows.size())));
      val_rows.insert(val_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_val));
      fit_rows.insert(fit_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_val), rows.end());
    }
    std::sort(fit_rows.begin(), fit_rows.end());
    std::sort(val_rows.begin(), val_rows.end());
  }
  EFTC_REQUIRE(!fit_rows.empty() && !val_rows.empty(), ErrorCode::EmptyInput,
               "too few rows for a training/validation split");
  std::vector<int> y_fit, y_val;
  for (auto i : fit_rows) y_fit.push_back(y[static_cast<std::size_t>(i)]);
  for (auto i : val_rows) y_val.push_back(y[static_cast<std::size_t>(i)]);

  std::vector<int> with = conditioning;
  with.insert(with.end(), features.begin(), features.end());
  std::sort(with.begin(), with.end());
  std::vector<int> without = conditioning;
  std::sort(without.begin(), without.end());
  const Matrix fit_with = take(X, fit_rows, with), val_with = take(X, val_rows, with);
  const Matrix fit_without = take(X, fit_rows, without), val_without = take(X, val_rows, without);

  const ProbabilityTrainer trainer = options.trainer ? options.trainer : default_importance_trainer();
  const auto R = static_cast<std::size_t>(options.repetitions);
  std::vector<double> loss_with(R), loss_without(R);
  parallel_for(R, [&](std::size_t r) {
    const std::uint64_t seed = derive_seed(options.seed, r + 1);
    loss_with[r] = cross_entropy(trainer(fit_with, y_fit, n_classes, val_with, seed), y_val);
    loss_without[r] = cross_entropy(trainer(fit_without, y_fit, n_classes, val_without, seed), y_val);
  });

  ImportanceReport rep;
  rep.features = features;
  rep.conditioning_set = conditioning;
  rep.repetitions = options.repetitions;
  for (std::size_t r = 0; r < R; ++r) {
    rep.per_repetition.push_back(loss_without[r] - loss_with[r]);
    rep.loss_with += loss_with[r];
    rep.loss_without += loss_without[r];
  }
  rep.loss_with /= static_cast<double>(R);
  rep.loss_without /= static_cast<double>(R);
  rep.importance = rep.loss_without - rep.loss_with;
  return rep;
}

std::string policy_name(ConditioningPolicy p) {
  return p == ConditioningPolicy::SameSpline ? "SAME_SPLINE" : "CORR_THRESHOLD";
}

std::string importance_csv(const std::vector<ImportanceReport>& reports) {
  auto join = [](const std::vector<int>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? " " : "") + std::to_string(v[k]);
    return s;
  };
  std::string out = "features,policy,tau,conditioning_set,importance,loss_without,loss_with,repetitions,loss\n";
  for (const auto& r : reports) {
    const std::string tau = r.policy == ConditioningPolicy::CorrThreshold ? format_double(r.tau) : "";
    out += join(r.features) + "," + policy_name(r.policy) + "," + tau + "," + join(r.conditioning_set) + "," +
           format_double(r.importance) + "," + format_double(r.loss_without) + "," + format_double(r.loss_with) +
           "," + std::to_string(r.repetitions) + "," + r.loss_name + "\n";
  }
  return out;
}

}  // namespace eftc
